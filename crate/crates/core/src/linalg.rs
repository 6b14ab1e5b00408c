//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C0: Complex64 = Complex64::new(0.0, 0.0);
pub const C1: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

/// `tr_B ρ` for `ρ` on `ℂ^{d_a} ⊗ ℂ^{d_b}` with the first factor as the
/// slow index.
pub fn partial_trace_second(rho: &CMatrix, da: usize, db: usize) -> CMatrix {
    assert_eq!(rho.nrows(), da * db);
    let mut out = CMatrix::zeros(da, da);
    for i in 0..da {
        for j in 0..da {
            let mut s = C0;
            for k in 0..db {
                s += rho[(i * db + k, j * db + k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `tr_A ρ`, the marginal on the second factor.
pub fn partial_trace_first(rho: &CMatrix, da: usize, db: usize) -> CMatrix {
    assert_eq!(rho.nrows(), da * db);
    let mut out = CMatrix::zeros(db, db);
    for k in 0..da {
        for i in 0..db {
            for j in 0..db {
                out[(i, j)] += rho[(k * db + i, k * db + j)];
            }
        }
    }
    out
}

/// Sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// `½‖a - b‖₁`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitize(a).symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(a.nrows(), a.ncols());
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue_hermitian(a: &CMatrix) -> f64 {
    hermitize(a).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let schur = a
        .clone()
        .try_schur(1e-15, 100_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// `A X A†`.
pub fn conjugate(a: &CMatrix, x: &CMatrix) -> CMatrix {
    a * x * a.adjoint()
}

/// Row-major vectorization: index `m·N + n` holds `X[m, n]`.
pub fn vec_row_major(x: &CMatrix) -> CVector {
    let (r, cdim) = x.shape();
    CVector::from_iterator(r * cdim, (0..r).flat_map(|i| (0..cdim).map(move |j| (i, j))).map(|(i, j)| x[(i, j)]))
}

pub fn unvec_row_major(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// Choi matrix `Σ_{mn} |m⟩⟨n| ⊗ Φ(|m⟩⟨n|)` of a map on `N × N` matrices.
pub fn choi<F: FnMut(&CMatrix) -> CMatrix>(n: usize, mut map: F) -> CMatrix {
    let mut out = CMatrix::zeros(n * n, n * n);
    for m in 0..n {
        for k in 0..n {
            let mut e = CMatrix::zeros(n, n);
            e[(m, k)] = C1;
            let img = map(&e);
            for i in 0..n {
                for j in 0..n {
                    out[(m * n + i, k * n + j)] = img[(i, j)];
                }
            }
        }
    }
    out
}

/// Matrix exponential by scaling and squaring (nalgebra's Padé implementation).
pub fn expm(a: &CMatrix) -> CMatrix {
    a.exp()
}

/// Von Neumann entropy `-tr ρ ln ρ` (eigenvalues below 1e-300 dropped).
pub fn entropy(rho: &CMatrix) -> f64 {
    hermitize(rho)
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Operator 2-norm bound via the Frobenius norm.
pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let a = random_matrix(rng, n);
        let p = &a * a.adjoint();
        let tr = p.trace();
        p / tr
    }

    #[test]
    fn partial_traces_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 3);
        let ab = kron(&a, &b);
        assert!(max_abs(&(partial_trace_second(&ab, 2, 3) - &a)) < 1e-14);
        assert!(max_abs(&(partial_trace_first(&ab, 2, 3) - &b)) < 1e-14);
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotation() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn choi_of_identity_is_maximally_entangled_projector() {
        let ch = choi(2, |x| x.clone());
        // |Ω⟩⟨Ω| with |Ω⟩ = |00⟩ + |11⟩
        assert_eq!(ch[(0, 0)], C1);
        assert_eq!(ch[(0, 3)], C1);
        assert_eq!(ch[(3, 3)], C1);
        assert_eq!(ch[(1, 1)], C0);
    }

    #[test]
    fn vectorization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 3);
        let v = vec_row_major(&x);
        assert_eq!(v[1], x[(0, 1)]);
        assert_eq!(unvec_row_major(&v, 3), x);
    }

    #[test]
    fn expm_of_commuting_diagonal() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5), Complex64::new(0.0, 2.0)]));
        let e = expm(&d);
        assert!((e[(0, 0)] - c(0.5f64.exp())).norm() < 1e-14);
        assert!((e[(1, 1)] - Complex64::new(0.0, 2.0).exp()).norm() < 1e-14);
    }
}
