//! Dense complex and real linear algebra used throughout the crate.
//!
//! Complex matrices are row-major [`ComplexMatrix`]. The Hermitian eigensolver is a
//! cyclic Jacobi method; the real symmetric one in [`real`] is Householder
//! tridiagonalization followed by implicit QL.

mod complex;
pub mod real;

pub use complex::{ComplexMatrix, C64, I, ONE, ZERO};

use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by spectral routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigen-decomposition of a Hermitian matrix: `values` ascending, eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuilds V f(D) V^dagger.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            if fv[k] == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * fv[k];
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("expected square matrix, got {}x{}", m.rows(), m.cols())));
    }
    if !m.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NotHermitian(m.hermiticity_defect()));
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    require_hermitian(m)?;
    Ok(jacobi(&m.hermitian_part()))
}

pub fn eigvals_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(m)?.values)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.values[0])
}

/// Cyclic complex Jacobi. Input must be exactly Hermitian.
fn jacobi(m: &ComplexMatrix) -> HermitianEigen {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n == 0 || scale == 0.0 {
        return HermitianEigen { values: vec![0.0; n], vectors: v };
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // W = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on columns p, q.
                let ph = phase.conj();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ph * s;
                    a[(k, q)] = akp * s + akq * ph * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph * s;
                    v[(k, q)] = vkp * s + vkq * ph * c;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    HermitianEigen { values, vectors }
}

/// Kronecker product A (x) B.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    factors.iter().fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Traces out every subsystem not listed in `keep`. Subsystem order is preserved.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "partial trace: matrix is {}x{} but dims {:?} give {total}",
            m.rows(),
            m.cols(),
            dims
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Dimension(format!("partial trace: bad keep set {keep:?} for {} systems", dims.len())));
    }
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let offsets = |systems: &[usize]| -> Vec<usize> {
        let count: usize = systems.iter().map(|&k| dims[k]).product();
        let mut out = Vec::with_capacity(count);
        for mut idx in 0..count {
            let mut off = 0;
            for &k in systems.iter().rev() {
                off += (idx % dims[k]) * strides[k];
                idx /= dims[k];
            }
            out.push(off);
        }
        out
    };
    let ko = offsets(keep);
    let to = offsets(&traced);
    let d = ko.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for (r, &kr) in ko.iter().enumerate() {
        for (c, &kc) in ko.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &to {
                acc += m[(kr + t, kc + t)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Tr_A of an operator on A (x) B.
pub fn trace_first(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    partial_trace(m, &[da, db], &[1]).expect("trace_first dimensions")
}

/// Tr_B of an operator on A (x) B.
pub fn trace_second(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    partial_trace(m, &[da, db], &[0]).expect("trace_second dimensions")
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigvals_hermitian(m)?.iter().map(|v| v.abs()).sum())
}

/// exp(s M) for Hermitian M and complex scalar s, via the spectral decomposition.
pub fn matrix_exp_hermitian(m: &ComplexMatrix, s: C64) -> Result<ComplexMatrix> {
    let e = eig_hermitian(m)?;
    let n = e.values.len();
    let ev: Vec<C64> = e.values.iter().map(|&v| (s * v).exp()).collect();
    let v = &e.vectors;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| (0..n).map(|k| v[(i, k)] * ev[k] * v[(j, k)].conj()).sum()))
}

/// exp(-i t H).
pub fn unitary_evolution(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    matrix_exp_hermitian(h, C64::new(0.0, -t))
}

/// Square root of a PSD matrix, clipping negative eigenvalues.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(m)?.map(|v| v.max(0.0).sqrt()))
}

/// M^{-1/2} for a positive definite matrix.
pub fn inv_sqrt_pd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eig_hermitian(m)?;
    let floor = 1e-14 * e.values.last().copied().unwrap_or(1.0).abs().max(1e-300);
    if e.values[0] <= floor {
        return Err(Error::Singular(format!("minimum eigenvalue {:e} is not positive", e.values[0])));
    }
    Ok(e.map(|v| 1.0 / v.sqrt()))
}

/// Euclidean inner product <u|v>.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of Hermitian k x k matrices (Frobenius inner product).
/// Diagonal units first, then symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(k: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        out.push(ComplexMatrix::unit(k, i, i));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        for j in (i + 1)..k {
            let mut s = ComplexMatrix::zeros(k, k);
            s[(i, j)] = C64::new(r, 0.0);
            s[(j, i)] = C64::new(r, 0.0);
            out.push(s);
            let mut a = ComplexMatrix::zeros(k, k);
            a[(i, j)] = C64::new(0.0, r);
            a[(j, i)] = C64::new(0.0, -r);
            out.push(a);
        }
    }
    out
}

/// Coordinates of a Hermitian matrix in [`hermitian_basis`] order.
pub fn hermitian_coords(m: &ComplexMatrix) -> Vec<f64> {
    let k = m.dim();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        out.push(m[(i, i)].re);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out.push(s2 * z.re);
            out.push(s2 * z.im);
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn from_hermitian_coords(k: usize, coords: &[f64]) -> ComplexMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = ComplexMatrix::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = C64::new(coords[i], 0.0);
    }
    let mut idx = k;
    for i in 0..k {
        for j in (i + 1)..k {
            let z = C64::new(coords[idx] * r, coords[idx + 1] * r);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

/// Groups sorted eigenvalues into clusters closer than `tol`, returning index ranges.
pub fn cluster_sorted(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > tol {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (&g + &g.adjoint()).scale(0.5)
    }

    #[test]
    fn jacobi_reconstructs_and_is_orthonormal() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (12, 4), (32, 5)] {
            let m = random_hermitian(n, seed);
            let e = eig_hermitian(&m).unwrap();
            let rec = e.map(|v| v);
            let tol = 1e-10 * m.frobenius_norm().max(1.0);
            assert!((&rec - &m).frobenius_norm() <= tol);
            let vv = e.vectors.adjoint().matmul(&e.vectors);
            assert!((&vv - &ComplexMatrix::identity(n)).frobenius_norm() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn pauli_y_spectrum() {
        let y = ComplexMatrix::from_vec(2, 2, vec![ZERO, -I, I, ZERO]).unwrap();
        let v = eigvals_hermitian(&y).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let (da, db, dc) = (2, 3, 2);
        let m = random_hermitian(da * db * dc, 9);
        let pt = partial_trace(&m, &[da, db, dc], &[0, 2]).unwrap();
        for a in 0..da {
            for c in 0..dc {
                for a2 in 0..da {
                    for c2 in 0..dc {
                        let mut acc = ZERO;
                        for b in 0..db {
                            acc += m[((a * db + b) * dc + c, (a2 * db + b) * dc + c2)];
                        }
                        assert!((pt[(a * dc + c, a2 * dc + c2)] - acc).norm() < 1e-12);
                    }
                }
            }
        }
        let t = partial_trace(&m, &[da, db, dc], &[]).unwrap();
        assert!((t[(0, 0)] - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn kron_of_identities() {
        let k = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp_hermitian(&ComplexMatrix::zeros(3, 3), ONE).unwrap();
        assert!((&e - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn evolution_is_unitary() {
        let h = random_hermitian(4, 11);
        let u = unitary_evolution(&h, 0.7).unwrap();
        assert!((&u.matmul(&u.adjoint()) - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn hermitian_coords_roundtrip_and_inner_product() {
        let a = random_hermitian(4, 21);
        let b = random_hermitian(4, 22);
        let ca = hermitian_coords(&a);
        let cb = hermitian_coords(&b);
        let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
        assert!((dot - a.matmul(&b).trace().re).abs() < 1e-12);
        assert!((&from_hermitian_coords(4, &ca) - &a).frobenius_norm() < 1e-14);
        let basis = hermitian_basis(4);
        for (k, f) in basis.iter().enumerate() {
            assert!((a.inner_re(f) - ca[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_norm_of_pauli_z() {
        let z = ComplexMatrix::diag_real(&[1.0, -1.0]);
        assert!((trace_norm(&z).unwrap() - 2.0).abs() < 1e-15);
    }
}
