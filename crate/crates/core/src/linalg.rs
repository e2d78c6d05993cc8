//! Small dense symmetric eigensolvers.
//!
//! Both routines are cyclic Jacobi sweeps. They are slower than a
//! tridiagonal QR for large `N`, but for the 3×3 and 6×6 matrices used in
//! cross recovery they are accurate to a few ulps on the eigenvectors and
//! fully deterministic.

use nalgebra::{Matrix3, SMatrix, SVector};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues are sorted ascending; `vectors` holds the matching unit
/// eigenvectors as columns. Each eigenvector is signed so that its first
/// component of magnitude above `1e-12` is positive.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<const N: usize> {
    pub values: SVector<f64, N>,
    pub vectors: SMatrix<f64, N, N>,
}

impl<const N: usize> SymmetricEigen<N> {
    /// Decompose `m`. Only the lower triangle is read; the matrix is
    /// assumed symmetric.
    pub fn new(m: &SMatrix<f64, N, N>) -> Self {
        let mut a = *m;
        for i in 0..N {
            for j in 0..i {
                a[(j, i)] = a[(i, j)];
            }
        }
        let mut v = SMatrix::<f64, N, N>::identity();
        let scale = a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if scale == 0.0 {
            return Self::sorted(SVector::zeros(), v);
        }

        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..N)
                .flat_map(|p| ((p + 1)..N).map(move |q| (p, q)))
                .map(|(p, q)| a[(p, q)] * a[(p, q)])
                .sum();
            if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a[(p, q)];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate(&mut a, &mut v, p, q, c, s);
                }
            }
        }

        Self::sorted(SVector::from_fn(|i, _| a[(i, i)]), v)
    }

    fn sorted(values: SVector<f64, N>, vectors: SMatrix<f64, N, N>) -> Self {
        let mut order: [usize; N] = std::array::from_fn(|i| i);
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let values = SVector::from_fn(|i, _| values[order[i]]);
        let mut out = SMatrix::<f64, N, N>::zeros();
        for (dst, &src) in order.iter().enumerate() {
            let mut col = vectors.column(src).into_owned();
            if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    col = -col;
                }
            }
            out.set_column(dst, &col);
        }
        Self { values, vectors: out }
    }

    /// Smallest difference between consecutive sorted eigenvalues.
    pub fn min_gap(&self) -> f64 {
        (1..N)
            .map(|i| self.values[i] - self.values[i - 1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Apply the Jacobi rotation in the (p, q) plane: `a ← Jᵀ a J`, `v ← v J`.
fn rotate<const N: usize>(a: &mut SMatrix<f64, N, N>, v: &mut SMatrix<f64, N, N>, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..N {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..N {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..N {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Orthogonal joint diagonalization of a set of symmetric 3×3 matrices.
///
/// Starting from the orthonormal frame `start`, applies plane rotations
/// that each maximize the summed squared diagonal of `Vᵀ Aₖ V` over the
/// pair being rotated (the real-symmetric case of the Cardoso–Souloumiac
/// sweep). Returns the final frame with columns as the common axes.
pub fn joint_diagonalize(mats: &[Matrix3<f64>], start: &Matrix3<f64>) -> Matrix3<f64> {
    let mut v = *start;
    let mut work: Vec<Matrix3<f64>> = mats.iter().map(|m| v.transpose() * m * v).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..3 {
                let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
                for m in &work {
                    let h0 = m[(p, p)] - m[(q, q)];
                    let h1 = m[(p, q)] + m[(q, p)];
                    g00 += h0 * h0;
                    g01 += h0 * h1;
                    g11 += h1 * h1;
                }
                let Some((x, y)) = dominant_eigvec2(g00, g01, g11) else {
                    continue;
                };
                // (x, y) = (cos 2θ, sin 2θ) with x ≥ 0.
                let c = ((1.0 + x) / 2.0).sqrt();
                let s = y / (2.0 * c);
                if s.abs() < 1e-15 {
                    continue;
                }
                rotated = true;
                let mut j = Matrix3::identity();
                j[(p, p)] = c;
                j[(q, q)] = c;
                j[(p, q)] = -s;
                j[(q, p)] = s;
                for m in work.iter_mut() {
                    *m = j.transpose() * *m * j;
                }
                v *= j;
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

/// Unit eigenvector of `[[a, b], [b, d]]` for its largest eigenvalue,
/// oriented so its first component is non-negative.
fn dominant_eigvec2(a: f64, b: f64, d: f64) -> Option<(f64, f64)> {
    let half = 0.5 * (a - d);
    let root = half.hypot(b);
    if root == 0.0 {
        return None;
    }
    let lambda = 0.5 * (a + d) + root;
    let (x, y) = if a >= d { (lambda - d, b) } else { (b, lambda - a) };
    let n = x.hypot(y);
    if n == 0.0 {
        return None;
    }
    let (x, y) = (x / n, y / n);
    Some(if x < 0.0 { (-x, -y) } else { (x, y) })
}
