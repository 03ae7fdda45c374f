//! Small dense complex linear algebra used by the covariance and waveform
//! modules: Cholesky, triangular solves and a Hermitian Jacobi eigensolver.

use ndarray::Array2;
use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::num::Real;

pub fn frobenius<T: Real>(a: &Array2<Complex<T>>) -> f64 {
    a.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum::<f64>().sqrt()
}

/// Largest `|a_jk − conj(a_kj)|` relative to the Frobenius norm.
pub fn hermitian_defect<T: Real>(a: &Array2<Complex<T>>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            worst = worst.max((a[[j, k]] - a[[k, j]].conj()).norm().to_f64_lossy());
        }
    }
    let f = frobenius(a);
    if f > 0.0 {
        worst / f
    } else {
        worst
    }
}

pub fn is_hermitian<T: Real>(a: &Array2<Complex<T>>, tol: f64) -> bool {
    a.is_square() && hermitian_defect(a) <= tol
}

pub fn adjoint<T: Real>(a: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    a.t().mapv(|z| z.conj())
}

pub fn matvec<T: Real>(a: &Array2<Complex<T>>, x: &[Complex<T>]) -> Vec<Complex<T>> {
    a.rows().into_iter().map(|row| row.iter().zip(x).fold(Complex::zero(), |acc, (r, v)| acc + r * v)).collect()
}

/// `xᴴ A x`, real part (exact for Hermitian `A` up to rounding).
pub fn quadratic_form<T: Real>(a: &Array2<Complex<T>>, x: &[Complex<T>]) -> T {
    let ax = matvec(a, x);
    x.iter().zip(&ax).fold(Complex::zero(), |acc: Complex<T>, (u, v)| acc + u.conj() * v).re
}

/// Lower-triangular `L` with `A = L Lᴴ`.
pub fn cholesky<T: Real>(a: &Array2<Complex<T>>) -> Result<Array2<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::Domain("Cholesky needs a square matrix".into()));
    }
    let n = a.nrows();
    let mut l = Array2::<Complex<T>>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]].re;
        for k in 0..j {
            d = d - l[[j, k]].norm_sqr();
        }
        if !(d > T::zero()) {
            return Err(Error::Conditioning(format!("matrix is not positive definite (pivot {j})")));
        }
        let d = d.sqrt();
        l[[j, j]] = Complex::new(d, T::zero());
        for i in j + 1..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solve `L x = b`.
pub fn forward_solve<T: Real>(l: &Array2<Complex<T>>, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = b.len();
    let mut x = vec![Complex::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve `Lᴴ x = b`.
pub fn adjoint_back_solve<T: Real>(l: &Array2<Complex<T>>, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = b.len();
    let mut x = vec![Complex::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - l[[k, i]].conj() * x[k];
        }
        x[i] = s / l[[i, i]].conj();
    }
    x
}

/// `L⁻¹ B L⁻ᴴ`, the whitened form of `B` under the metric `A = L Lᴴ`.
pub fn whiten<T: Real>(l: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> Array2<Complex<T>> {
    let n = l.nrows();
    let mut tmp = Array2::<Complex<T>>::zeros((n, n));
    for j in 0..n {
        let col: Vec<_> = b.column(j).to_vec();
        for (i, v) in forward_solve(l, &col).into_iter().enumerate() {
            tmp[[i, j]] = v;
        }
    }
    // (L⁻¹ tmpᴴ)ᴴ = tmp L⁻ᴴ
    let tmp_h = adjoint(&tmp);
    let mut out = Array2::<Complex<T>>::zeros((n, n));
    for j in 0..n {
        let col: Vec<_> = tmp_h.column(j).to_vec();
        for (i, v) in forward_solve(l, &col).into_iter().enumerate() {
            out[[j, i]] = v.conj();
        }
    }
    // Symmetrize rounding.
    let half = T::lit(0.5);
    for j in 0..n {
        out[[j, j]] = Complex::new(out[[j, j]].re, T::zero());
        for k in j + 1..n {
            let avg = (out[[j, k]] + out[[k, j]].conj()) * half;
            out[[j, k]] = avg;
            out[[k, j]] = avg.conj();
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in ascending order and the matching unit-norm
/// eigenvectors as columns.
pub fn hermitian_eigen<T: Real>(a: &Array2<Complex<T>>) -> Result<(Vec<T>, Array2<Complex<T>>)> {
    if !a.is_square() {
        return Err(Error::Domain("eigen-decomposition needs a square matrix".into()));
    }
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<Complex<T>>::eye(n);
    let scale = T::lit(frobenius(a).max(f64::MIN_POSITIVE));
    let tol = T::epsilon() * scale * T::lit(0.1);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + m[[p, q]].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                let phase = apq / r;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) · [[c, s], [−s, c]]
                let jpp = Complex::new(c, T::zero());
                let jpq = Complex::new(s, T::zero());
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;
                for k in 0..n {
                    let (akp, akq) = (m[[k, p]], m[[k, q]]);
                    m[[k, p]] = akp * jpp + akq * jqp;
                    m[[k, q]] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[[p, k]], m[[q, k]]);
                    m[[p, k]] = jpp.conj() * apk + jqp.conj() * aqk;
                    m[[q, k]] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                m[[p, q]] = Complex::zero();
                m[[q, p]] = Complex::zero();
                m[[p, p]] = Complex::new(m[[p, p]].re, T::zero());
                m[[q, q]] = Complex::new(m[[q, q]].re, T::zero());
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = vkp * jpp + vkq * jqp;
                    v[[k, q]] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.partial_cmp(&m[[j, j]].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[[i, i]].re).collect();
    let mut vectors = Array2::<Complex<T>>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(n: usize, seed: u64) -> Array2<Complex<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, n + 2), |_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let xh = adjoint(&x);
        x.dot(&xh)
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = random_pd(6, 1);
        let l = cholesky(&a).unwrap();
        let back = l.dot(&adjoint(&l));
        assert!(frobenius(&(&back - &a)) / frobenius(&a) < 1e-13);
        let b: Vec<_> = (0..6).map(|k| Complex::new(k as f64, 1.0)).collect();
        let x = forward_solve(&l, &b);
        let lx = matvec(&l, &x);
        assert!(crate::num::rel_l2(&lx, &b) < 1e-13);
        let y = adjoint_back_solve(&l, &b);
        let ly = matvec(&adjoint(&l), &y);
        assert!(crate::num::rel_l2(&ly, &b) < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = Array2::<Complex<f64>>::eye(3);
        a[[2, 2]] = Complex::new(-1.0, 0.0);
        assert!(matches!(cholesky(&a), Err(Error::Conditioning(_))));
    }

    #[test]
    fn eigen_reconstructs() {
        for seed in 0..5 {
            let a = random_pd(7, seed);
            let (w, v) = hermitian_eigen(&a).unwrap();
            for win in w.windows(2) {
                assert!(win[0] <= win[1]);
            }
            let vh = adjoint(&v);
            let eye = vh.dot(&v);
            assert!(frobenius(&(&eye - &Array2::<Complex<f64>>::eye(7))) < 1e-12);
            let d = Array2::from_diag(&ndarray::Array1::from_iter(w.iter().map(|&x| Complex::new(x, 0.0))));
            let back = v.dot(&d).dot(&vh);
            assert!(frobenius(&(&back - &a)) / frobenius(&a) < 1e-12);
        }
    }

    #[test]
    fn eigen_f32() {
        let a = random_pd(5, 3).mapv(|z| Complex::new(z.re as f32, z.im as f32));
        let (w, v) = hermitian_eigen(&a).unwrap();
        let d = Array2::from_diag(&ndarray::Array1::from_iter(w.iter().map(|&x| Complex::new(x, 0.0))));
        let back = v.dot(&d).dot(&adjoint(&v));
        assert!(frobenius(&(&back - &a)) / frobenius(&a) < 1e-5);
    }

    #[test]
    fn whiten_matches_explicit() {
        let a = random_pd(4, 8);
        let b = random_pd(4, 9);
        let l = cholesky(&a).unwrap();
        let c = whiten(&l, &b);
        // L C Lᴴ = B
        let back = l.dot(&c).dot(&adjoint(&l));
        assert!(frobenius(&(&back - &b)) / frobenius(&b) < 1e-12);
        assert!(is_hermitian(&c, 1e-15));
    }
}
