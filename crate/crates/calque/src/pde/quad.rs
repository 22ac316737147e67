//! Gauss-Legendre quadrature on the unit interval.

use alloc::vec::Vec;

use crate::fp;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`,
/// exact for polynomials up to degree `2n - 1`. Nodes come out ascending.
///
/// Computed by Newton iteration on the Legendre recurrence from the usual
/// Chebyshev initial guesses; the iteration is deterministic, so repeated
/// calls give bitwise identical rules.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one node");
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        // Root of P_n near the k-th Chebyshev angle, on [-1, 1].
        let mut x = fp::cos(core::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if fp::abs(dx) <= 1e-16 * (1.0 + fp::abs(x)) {
                let (p2, d2) = legendre_with_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        // Map [-1, 1] -> [0, 1]; the Jacobian halves the weight 2/((1-x^2) P'^2).
        // The raw roots walk from +1 down to -1, so the map leaves the
        // mapped nodes already ascending.
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in [1, 2, 5, 16, 19, 40] {
            let (_, w) = gauss_legendre_unit(n);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}: sum {s}");
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        let n = 6;
        let (x, w) = gauss_legendre_unit(n);
        for k in 0..=(2 * n - 1) {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((num - exact).abs() < 1e-14, "x^{k}: {num} vs {exact}");
        }
    }

    #[test]
    fn integrates_sine_accurately() {
        let (x, w) = gauss_legendre_unit(12);
        let num: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (core::f64::consts::PI * xi).sin())
            .sum();
        let exact = 2.0 / core::f64::consts::PI;
        assert!((num - exact).abs() < 1e-14);
    }

    #[test]
    fn nodes_ascend_inside_the_interval() {
        let (x, _) = gauss_legendre_unit(9);
        for pair in x.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        assert!(x[0] > 0.0 && x[8] < 1.0);
    }
}
