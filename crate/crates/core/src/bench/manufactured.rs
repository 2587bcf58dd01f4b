//! The smooth divergence-free velocity and the steep pressure of the benchmark.
//!
//! `u = curl(sin²(πx) sin²(πy))` written as `(a(x) b(y), -a(y) b(x))` with
//! `a(s) = sin²(πs)` and `b(s) = sin(πs) cos(πs)`. The pressure is
//! `10⁶ exp(-(x - 0.3)⁻² - (y - 0.064)⁻²)` shifted to zero mean; the exponential is
//! extended by its limit 0 on the lines `x = 0.3` and `y = 0.064`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::mesh::Point2;
use crate::polynomials::gauss_legendre;

const AMPLITUDE: f64 = 1e6;
const X0: f64 = 0.3;
const Y0: f64 = 0.064;

fn a(s: f64) -> f64 {
    (PI * s).sin().powi(2)
}

fn da(s: f64) -> f64 {
    PI * (2.0 * PI * s).sin()
}

fn d2a(s: f64) -> f64 {
    2.0 * PI * PI * (2.0 * PI * s).cos()
}

fn b(s: f64) -> f64 {
    0.5 * (2.0 * PI * s).sin()
}

fn db(s: f64) -> f64 {
    PI * (2.0 * PI * s).cos()
}

fn d2b(s: f64) -> f64 {
    -4.0 * PI * PI * b(s)
}

/// `exp(-(s - c)⁻²)` and its derivative, both 0 on the line `s = c` and wherever the
/// exponential underflows.
fn flat_exp(s: f64, c: f64) -> (f64, f64) {
    let d = s - c;
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let v = (-1.0 / (d * d)).exp();
    if v == 0.0 {
        return (0.0, 0.0);
    }
    (v, v * 2.0 / (d * d * d))
}

/// `∫_0^1 exp(-(s - c)⁻²) ds` by composite Gauss-Legendre on panels split at `c`.
fn flat_exp_integral(c: f64) -> f64 {
    let (x, w) = gauss_legendre(30);
    let panels = 400;
    let mut total = 0.0;
    for (lo, hi) in [(0.0, c), (c, 1.0)] {
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            total += x
                .iter()
                .zip(&w)
                .map(|(t, w)| 0.5 * h * w * flat_exp(a + 0.5 * h * (t + 1.0), c).0)
                .sum::<f64>();
        }
    }
    total
}

/// Closed-form exact solution and body force `f = -Δu + ∇p`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    shift: f64,
}

impl Default for ManufacturedSolution {
    fn default() -> Self {
        Self::new()
    }
}

impl ManufacturedSolution {
    pub fn new() -> Self {
        static SHIFT: OnceLock<f64> = OnceLock::new();
        let shift = *SHIFT.get_or_init(|| -AMPLITUDE * flat_exp_integral(X0) * flat_exp_integral(Y0));
        Self { shift }
    }

    /// The constant making the pressure mean-free.
    pub fn pressure_shift(&self) -> f64 {
        self.shift
    }

    pub fn velocity(&self, p: Point2) -> [f64; 2] {
        [a(p.x) * b(p.y), -a(p.y) * b(p.x)]
    }

    /// `[[∂_x u_1, ∂_y u_1], [∂_x u_2, ∂_y u_2]]`.
    pub fn velocity_gradient(&self, p: Point2) -> [[f64; 2]; 2] {
        [
            [da(p.x) * b(p.y), a(p.x) * db(p.y)],
            [-a(p.y) * db(p.x), -da(p.y) * b(p.x)],
        ]
    }

    pub fn pressure(&self, p: Point2) -> f64 {
        AMPLITUDE * flat_exp(p.x, X0).0 * flat_exp(p.y, Y0).0 + self.shift
    }

    pub fn pressure_gradient(&self, p: Point2) -> [f64; 2] {
        let (ex, dex) = flat_exp(p.x, X0);
        let (ey, dey) = flat_exp(p.y, Y0);
        [AMPLITUDE * dex * ey, AMPLITUDE * ex * dey]
    }

    pub fn laplacian_velocity(&self, p: Point2) -> [f64; 2] {
        [
            d2a(p.x) * b(p.y) + a(p.x) * d2b(p.y),
            -(a(p.y) * d2b(p.x) + d2a(p.y) * b(p.x)),
        ]
    }

    pub fn force(&self, p: Point2) -> [f64; 2] {
        let l = self.laplacian_velocity(p);
        let g = self.pressure_gradient(p);
        [-l[0] + g[0], -l[1] + g[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn divergence_free_and_zero_on_boundary() {
        let m = ManufacturedSolution::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = Point2::new(rng.gen(), rng.gen());
            let g = m.velocity_gradient(p);
            assert!((g[0][0] + g[1][1]).abs() <= 1e-12);
        }
        for i in 0..=100 {
            let s = i as f64 / 100.0;
            for p in [
                Point2::new(s, 0.0),
                Point2::new(s, 1.0),
                Point2::new(0.0, s),
                Point2::new(1.0, s),
            ] {
                let u = m.velocity(p);
                assert!(u[0].abs() <= 1e-12 && u[1].abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = ManufacturedSolution::new();
        let h = 1e-5;
        for p in [Point2::new(0.71, 0.42), Point2::new(0.9, 0.95), Point2::new(0.15, 0.33)] {
            let g = m.velocity_gradient(p);
            let gp = m.pressure_gradient(p);
            let fd = |f: &dyn Fn(Point2) -> f64, dx: f64, dy: f64| {
                (f(Point2::new(p.x + dx, p.y + dy)) - f(Point2::new(p.x - dx, p.y - dy))) / (2.0 * h)
            };
            for c in 0..2 {
                let uc = |q: Point2| m.velocity(q)[c];
                assert!((fd(&uc, h, 0.0) - g[c][0]).abs() < 1e-7);
                assert!((fd(&uc, 0.0, h) - g[c][1]).abs() < 1e-7);
                let gc = |q: Point2| m.velocity_gradient(q)[c][0];
                let gd = |q: Point2| m.velocity_gradient(q)[c][1];
                let lap = fd(&gc, h, 0.0) + fd(&gd, 0.0, h);
                assert!((lap - m.laplacian_velocity(p)[c]).abs() < 1e-5);
            }
            let pr = |q: Point2| m.pressure(q);
            let scale = gp[0].abs().max(gp[1].abs()).max(1.0);
            assert!((fd(&pr, h, 0.0) - gp[0]).abs() < 1e-6 * scale);
            assert!((fd(&pr, 0.0, h) - gp[1]).abs() < 1e-6 * scale);
        }
    }

    #[test]
    fn finite_on_the_singular_lines() {
        let m = ManufacturedSolution::new();
        for p in [
            Point2::new(0.3, 0.5),
            Point2::new(0.5, 0.064),
            Point2::new(0.3 + 1e-9, 0.2),
        ] {
            assert!(m.force(p).iter().all(|v| v.is_finite()));
            assert_eq!(m.pressure(p), m.pressure_shift());
        }
    }

    #[test]
    fn mean_free_pressure() {
        // Independent check with a tensor Gauss rule on a fine uniform grid of the square.
        let m = ManufacturedSolution::new();
        let (x, w) = gauss_legendre(12);
        let n = 200;
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                for (xa, wa) in x.iter().zip(&w) {
                    for (xb, wb) in x.iter().zip(&w) {
                        let p = Point2::new((i as f64 + 0.5 * (xa + 1.0)) * h, (j as f64 + 0.5 * (xb + 1.0)) * h);
                        total += 0.25 * h * h * wa * wb * m.pressure(p);
                    }
                }
            }
        }
        assert!(total.abs() < 1e-8, "{total}");
        assert!(m.pressure_shift() < 0.0);
    }

    #[test]
    fn pressure_shift_matches_reference() {
        // Integral of the exponential term, from 30-digit adaptive quadrature split at the
        // lines where it is flat.
        const REFERENCE: f64 = 946.120_747_469_420_9;
        let m = ManufacturedSolution::new();
        assert!((m.pressure_shift() + REFERENCE).abs() < 1e-10, "{}", m.pressure_shift());
    }
}
