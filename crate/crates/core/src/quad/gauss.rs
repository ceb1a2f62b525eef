//! Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
//! on the Legendre polynomial from Chebyshev-based initial guesses, and cached
//! per point count.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Legendre polynomial value and derivative at x by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn compute(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess for the i-th positive root.
        let mut x =
            (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// ascending nodes. Results are cached; panics if n == 0.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| compute(n)).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 3, 4, 5, 8, 16, 32, 64, 128] {
            let (_, w) = gauss_legendre(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n={n} sum={sum}");
        }
    }

    #[test]
    fn four_point_rule_matches_reference() {
        // Abramowitz & Stegun 25.4.30.
        let (x, w) = gauss_legendre(4);
        let xr = [0.3399810435848563, 0.8611363115940526];
        let wr = [0.6521451548625461, 0.3478548451374538];
        assert!((x[2] - xr[0]).abs() < 1e-14 && (x[3] - xr[1]).abs() < 1e-14);
        assert!((x[1] + xr[0]).abs() < 1e-14 && (x[0] + xr[1]).abs() < 1e-14);
        assert!((w[2] - wr[0]).abs() < 1e-14 && (w[3] - wr[1]).abs() < 1e-14);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // n points are exact through degree 2n-1.
        for n in [2usize, 4, 7] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let value: f64 = x
                    .iter()
                    .zip(w.iter())
                    .map(|(xi, wi)| wi * xi.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
                assert!(
                    (value - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {value} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn smooth_integral_converges_spectrally() {
        let f = |x: f64| (2.0 * x).cos() * (x + 0.3).exp();
        // Oracle from a fine Simpson rule.
        let m = 100_000;
        let h = 2.0 / m as f64;
        let mut oracle = f(-1.0) + f(1.0);
        for k in 1..m {
            oracle += f(-1.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        oracle *= h / 3.0;
        let (x, w) = gauss_legendre(20);
        let value: f64 = x.iter().zip(w.iter()).map(|(xi, wi)| wi * f(*xi)).sum();
        assert!((value - oracle).abs() < 1e-12);
    }
}
