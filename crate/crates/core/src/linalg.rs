//! Dense least squares for tall, narrow systems.
//!
//! Householder QR reduces the `m x n` problem to an `n x n` triangle, whose
//! SVD (one-sided Jacobi) yields the minimum-norm solution. Singular values
//! below `RCOND * sigma_max` are treated as zero.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) const RCOND: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LsSolution {
    pub coef: Vec<f64>,
    pub rank: usize,
}

/// Minimum-norm minimiser of `|A x - b|`, with `A` row-major `rows x cols`.
pub(crate) fn lstsq(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> LsSolution {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(b.len(), rows);
    let n = cols;
    if n == 0 {
        return LsSolution { coef: Vec::new(), rank: 0 };
    }

    // Column-major working copy.
    let mut q = vec![0.0; rows * n];
    for i in 0..rows {
        for j in 0..n {
            q[j * rows + i] = a[i * n + j];
        }
    }
    let mut rhs = b.to_vec();

    let steps = rows.min(n);
    for k in 0..steps {
        let (head, tail) = q.split_at_mut((k + 1) * rows);
        let col = &mut head[k * rows..];
        let norm = libm::sqrt(col[k..].iter().map(|x| x * x).sum::<f64>());
        if norm == 0.0 {
            continue;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        col[k] -= alpha;
        let vnorm2: f64 = col[k..].iter().map(|x| x * x).sum();
        let v = &col[k..];
        let reflect = |target: &mut [f64]| {
            let dot: f64 = v.iter().zip(target.iter()).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (t, x) in target.iter_mut().zip(v) {
                *t -= f * x;
            }
        };
        for j in 0..n - k - 1 {
            reflect(&mut tail[j * rows + k..(j + 1) * rows]);
        }
        reflect(&mut rhs[k..]);
        col[k] = alpha;
    }

    // R (n x n, column-major, zero rows below `steps`) and the projected rhs.
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..steps.min(j + 1) {
            w[j * n + i] = q[j * rows + i];
        }
    }
    let mut c = vec![0.0; n];
    c[..steps].copy_from_slice(&rhs[..steps]);

    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    jacobi_svd(&mut w, &mut v, n);

    let sigmas: Vec<f64> = (0..n)
        .map(|j| libm::sqrt(w[j * n..(j + 1) * n].iter().map(|x| x * x).sum::<f64>()))
        .collect();
    let smax = sigmas.iter().copied().fold(0.0, f64::max);
    let tol = smax * RCOND;
    let mut coef = vec![0.0; n];
    let mut rank = 0;
    for j in 0..n {
        if sigmas[j] <= tol || sigmas[j] == 0.0 {
            continue;
        }
        rank += 1;
        let wj = &w[j * n..(j + 1) * n];
        let proj = wj.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>() / (sigmas[j] * sigmas[j]);
        for (x, vk) in coef.iter_mut().zip(&v[j * n..(j + 1) * n]) {
            *x += proj * vk;
        }
    }
    LsSolution { coef, rank }
}

/// One-sided Jacobi: rotates column pairs of `w` until mutually orthogonal,
/// accumulating the rotations in `v`. Afterwards `w = U * diag(sigma)`.
fn jacobi_svd(w: &mut [f64], v: &mut [f64], n: usize) {
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..n {
                    let (x, y) = (w[p * n + k], w[r * n + k]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let cs = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = cs * t;
                for m in [&mut *w, &mut *v] {
                    for k in 0..n {
                        let (x, y) = (m[p * n + k], m[r * n + k]);
                        m[p * n + k] = cs * x - sn * y;
                        m[r * n + k] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
}
