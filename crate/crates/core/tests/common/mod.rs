//! Shared test oracles, independent of the library's computational paths.

use rand::Rng;
use svlab_core::linalg::Matrix;
use svlab_core::rng::SeedSpec;

/// Eigenvalues of a symmetric matrix by classical two-sided cyclic Jacobi,
/// sorted descending. Independent of the library SVD (which is one-sided and
/// never forms the Gram matrix).
pub fn symmetric_eigenvalues_jacobi(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric eigensolver needs a square matrix");
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + m.frobenius_norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                m[(p, p)] = app - t * apq;
                m[(q, q)] = aqq + t * apq;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = c * aip - s * aiq;
                    m[(p, i)] = m[(i, p)];
                    m[(i, q)] = s * aip + c * aiq;
                    m[(q, i)] = m[(i, q)];
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}

/// Exact Pareto(alpha) samples by inverse-CDF transform.
pub fn pareto_samples(alpha: f64, n: usize, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(-1.0 / alpha)
        })
        .collect()
}

/// CDF of `sigma` when `sigma^2 ~ Gamma(shape 3, rate c)` (integer-shape
/// closed form), the stationary law of the one-dimensional singular-value
/// SDE with exponent 5.
pub fn gamma3_sigma_cdf(sigma: f64, rate: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let x = rate * sigma * sigma;
    1.0 - (-x).exp() * (1.0 + x + 0.5 * x * x)
}
