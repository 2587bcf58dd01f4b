//! Jacobi polynomials with weight `(1 - t)^0 (1 + t)^2`.

/// `ζ_k = C(k + 2, 2)`, the magnitude of `P_k^{(0,2)}(-1)`.
pub fn zeta(k: usize) -> f64 {
    ((k + 1) * (k + 2) / 2) as f64
}

/// `P_k^{(0,2)}(t)` by the three-term recurrence in the degree.
pub fn jacobi_p02(k: usize, t: f64) -> f64 {
    const A: f64 = 0.0;
    const B: f64 = 2.0;
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 0.5 * ((A + B + 2.0) * t + (A - B));
    for n in 2..=k {
        let n = n as f64;
        let s = 2.0 * n + A + B;
        let c0 = 2.0 * n * (n + A + B) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * t + A * A - B * B);
        let c2 = 2.0 * (n + A - 1.0) * (n + B - 1.0) * s;
        let next = (c1 * cur - c2 * prev) / c0;
        prev = cur;
        cur = next;
    }
    cur
}

/// Mean of `P_k^{(0,2)}(1 - 2λ_z)` over a triangle, where `λ_z` is the barycentric
/// coordinate of one of its vertices. Equals `(-1)^k / ζ_k`.
pub fn weighted_moment(k: usize) -> f64 {
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / zeta(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomials::{gauss_legendre, gauss_triangle};

    fn binom(n: f64, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i as f64 + 1.0))
    }

    /// Explicit sum `Σ_s C(n+α, n-s) C(n+β, s) ((t-1)/2)^s ((t+1)/2)^{n-s}`.
    fn jacobi_series(n: usize, a: f64, b: f64, t: f64) -> f64 {
        (0..=n)
            .map(|s| {
                binom(n as f64 + a, n - s)
                    * binom(n as f64 + b, s)
                    * ((t - 1.0) / 2.0).powi(s as i32)
                    * ((t + 1.0) / 2.0).powi((n - s) as i32)
            })
            .sum()
    }

    #[test]
    fn endpoint_values() {
        for k in 0..=12 {
            assert!((jacobi_p02(k, 1.0) - 1.0).abs() < 1e-12);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((jacobi_p02(k, -1.0) - sign * zeta(k)).abs() < 1e-10 * zeta(k));
        }
        assert_eq!(jacobi_p02(0, 0.3), 1.0);
        assert!((jacobi_p02(3, -1.0) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn matches_series() {
        for k in 0..=10 {
            for i in 0..=20 {
                let t = -1.0 + 0.1 * i as f64;
                let want = jacobi_series(k, 0.0, 2.0, t);
                assert!(
                    (jacobi_p02(k, t) - want).abs() < 1e-12 * want.abs().max(1.0),
                    "k={k} t={t}"
                );
            }
        }
    }

    #[test]
    fn orthogonal_under_weight() {
        let (x, w) = gauss_legendre(20);
        for m in 0..6 {
            for n in 0..6 {
                let ip: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&t, &w)| w * (1.0 + t).powi(2) * jacobi_p02(m, t) * jacobi_p02(n, t))
                    .sum();
                if m != n {
                    assert!(ip.abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn moment_matches_quadrature() {
        assert!((weighted_moment(1) + 1.0 / 3.0).abs() < 1e-15);
        assert!((weighted_moment(4) - 1.0 / 15.0).abs() < 1e-15);
        for k in 1..=10 {
            let rule = gauss_triangle(k).unwrap();
            let q: f64 = rule.iter().map(|(l, w)| w * jacobi_p02(k, 1.0 - 2.0 * l[0])).sum();
            assert!((q - weighted_moment(k)).abs() < 1e-13, "k={k}");
        }
    }
}
