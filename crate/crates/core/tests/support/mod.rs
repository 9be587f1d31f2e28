//! Independent oracles for the integration suites.
//!
//! Everything here deliberately avoids the crate's own numerical paths:
//! the eigensolver pivots greedily instead of sweeping cyclically, the SVD
//! is one-sided Jacobi on columns, and the SVM margin comes from a brute
//! grid search.

#![allow(clippy::needless_range_loop)]
#![allow(dead_code)]

use latentkit::Matrix;

/// Classical Jacobi eigendecomposition: rotate away the largest
/// off-diagonal element until none is left. Returns eigenvalues descending
/// with matching eigenvector columns.
pub fn classical_jacobi(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let tol = 1e-14 * m.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..200 * n * n {
        // Largest off-diagonal pivot.
        let (mut p, mut q, mut biggest) = (0, 1, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                if a.get(i, j).abs() > biggest {
                    biggest = a.get(i, j).abs();
                    p = i;
                    q = j;
                }
            }
        }
        if biggest <= tol {
            break;
        }
        let theta = 0.5 * (2.0 * a.get(p, q)).atan2(a.get(p, p) - a.get(q, q));
        let (s, c) = theta.sin_cos();
        // Rotate rows/columns p and q.
        for k in 0..n {
            let akp = a.get(k, p);
            let akq = a.get(k, q);
            a.set(k, p, c * akp + s * akq);
            a.set(k, q, -s * akp + c * akq);
        }
        for k in 0..n {
            let apk = a.get(p, k);
            let aqk = a.get(q, k);
            a.set(p, k, c * apk + s * aqk);
            a.set(q, k, -s * apk + c * aqk);
        }
        for k in 0..n {
            let vkp = v.get(k, p);
            let vkq = v.get(k, q);
            v.set(k, p, c * vkp + s * vkq);
            v.set(k, q, -s * vkp + c * vkq);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &old) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(old));
    }
    (eigenvalues, vectors)
}

/// One-sided Jacobi SVD: orthogonalizes column pairs of `a`, accumulating
/// the right singular vectors. Returns singular values descending and the
/// matching right singular vectors as columns.
pub fn one_sided_jacobi_svd(a: &Matrix) -> (Vec<f64>, Matrix) {
    let rows = a.rows();
    let cols = a.cols();
    let mut u = a.clone();
    let mut v = Matrix::identity(cols);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..cols - 1 {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    let x = u.get(i, p);
                    let y = u.get(i, q);
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(f64::MIN_POSITIVE) {
                    continue;
                }
                rotated = true;
                let theta = 0.5 * (2.0 * apq).atan2(app - aqq);
                let (s, c) = theta.sin_cos();
                for i in 0..rows {
                    let x = u.get(i, p);
                    let y = u.get(i, q);
                    u.set(i, p, c * x + s * y);
                    u.set(i, q, -s * x + c * y);
                }
                for i in 0..cols {
                    let x = v.get(i, p);
                    let y = v.get(i, q);
                    v.set(i, p, c * x + s * y);
                    v.set(i, q, -s * x + c * y);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<(f64, usize)> = (0..cols)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..rows {
                acc += u.get(i, j) * u.get(i, j);
            }
            (acc.sqrt(), j)
        })
        .collect();
    sigma.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let values: Vec<f64> = sigma.iter().map(|(s, _)| *s).collect();
    let mut vectors = Matrix::zeros(cols, cols);
    for (col, (_, old)) in sigma.iter().enumerate() {
        vectors.set_column(col, &v.column(*old));
    }
    (values, vectors)
}

/// Two-pass covariance: explicit means, then explicit centered products.
pub fn two_pass_covariance(a: &Matrix) -> Matrix {
    let d = a.rows();
    let l = a.cols();
    let mut means = vec![0.0; l];
    for j in 0..l {
        for i in 0..d {
            means[j] += a.get(i, j);
        }
        means[j] /= d as f64;
    }
    let mut cov = Matrix::zeros(l, l);
    for p in 0..l {
        for q in 0..l {
            let mut acc = 0.0;
            for i in 0..d {
                acc += (a.get(i, p) - means[p]) * (a.get(i, q) - means[q]);
            }
            cov.set(p, q, acc / (d as f64 - 1.0));
        }
    }
    cov
}

/// Best geometric margin over a dense grid of 2-D boundary angles, for
/// linearly separable labeled points (`true` = positive class).
pub fn grid_search_margin_2d(points: &[[f64; 2]], positive: &[bool]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let steps = 20_000;
    for k in 0..steps {
        let theta = k as f64 / steps as f64 * std::f64::consts::PI * 2.0;
        let w = [theta.cos(), theta.sin()];
        let mut min_pos = f64::INFINITY;
        let mut max_neg = f64::NEG_INFINITY;
        for (p, &is_pos) in points.iter().zip(positive) {
            let proj = w[0] * p[0] + w[1] * p[1];
            if is_pos {
                min_pos = min_pos.min(proj);
            } else {
                max_neg = max_neg.max(proj);
            }
        }
        best = best.max((min_pos - max_neg) / 2.0);
    }
    best
}

/// Excess kurtosis of a sample.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean: f64 = x.iter().sum::<f64>() / n;
    let m2: f64 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4: f64 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// Unmixing rotation angle (radians, in [0, pi/2)) that maximizes total
/// absolute excess kurtosis of the rotated channels; coarse grid plus a
/// fine refinement.
pub fn kurtosis_rotation_grid(channels: &Matrix) -> f64 {
    assert_eq!(channels.rows(), 2);
    let objective = |phi: f64| -> f64 {
        let (s, c) = phi.sin_cos();
        let row0: Vec<f64> = (0..channels.cols())
            .map(|j| c * channels.get(0, j) + s * channels.get(1, j))
            .collect();
        let row1: Vec<f64> = (0..channels.cols())
            .map(|j| -s * channels.get(0, j) + c * channels.get(1, j))
            .collect();
        excess_kurtosis(&row0).abs() + excess_kurtosis(&row1).abs()
    };
    let quarter = std::f64::consts::FRAC_PI_2;
    let coarse = 900;
    let mut best_phi = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..coarse {
        let phi = k as f64 / coarse as f64 * quarter;
        let v = objective(phi);
        if v > best {
            best = v;
            best_phi = phi;
        }
    }
    let span = quarter / coarse as f64;
    let fine = 200;
    for k in 0..=fine {
        let phi = best_phi - span + 2.0 * span * k as f64 / fine as f64;
        let phi = phi.rem_euclid(quarter);
        let v = objective(phi);
        if v > best {
            best = v;
            best_phi = phi;
        }
    }
    best_phi
}

/// Angle difference modulo 90 degrees (handles source permutation/sign).
pub fn angle_distance_mod_quarter(a: f64, b: f64) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut d = (a - b).rem_euclid(quarter);
    if d > quarter / 2.0 {
        d = quarter - d;
    }
    d
}
