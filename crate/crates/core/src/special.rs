//! Bessel functions of the first kind and Gauss-Legendre quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Below this argument the power series is used; above it, the Hankel
/// asymptotic expansion. Both are accurate to about 1e-12 at the seam.
const SERIES_LIMIT: f64 = 12.0;

/// `J_ν(x)` for integer order `ν ∈ {0, 1}`.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    assert!(order <= 1, "only orders 0 and 1 are implemented");
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        series(order, ax)
    } else {
        hankel(order, ax)
    };
    if order == 1 && x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(0, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(1, x)
}

fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    sum
}

fn hankel(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut p = 0.0;
    let mut q = 0.0;
    // a_k = ∏_{j=1..k} (μ - (2j-1)²) / (k! 8^k x^k)
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * order as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// `∫_a^b f` by 20-point Gauss-Legendre on `panels` equal sub-intervals.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gl20();
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            s += wi * f(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * s;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with scipy.special.j0 / j1.
    #[test]
    fn bessel_reference_values() {
        let cases = [
            (0, 1.0, 0.7651976865579665),
            (0, 5.0, -0.1775967713143383),
            (0, 10.0, -0.24593576445134832),
            (0, 15.0, -0.014224472826780597),
            (0, 30.0, -0.08636798358104031),
            (1, 1.0, 0.44005058574493355),
            (1, 5.0, -0.3275791375914653),
            (1, 10.0, 0.04347274616886141),
            (1, 15.0, 0.20510403861352278),
            (1, 30.0, -0.11875106261662305),
        ];
        for (order, x, expected) in cases {
            let got = bessel_j(order, x);
            assert!((got - expected).abs() < 1e-10, "J{order}({x}) = {got}, want {expected}");
        }
    }

    #[test]
    fn bessel_is_continuous_at_the_seam() {
        for order in 0..=1 {
            let a = series(order, SERIES_LIMIT);
            let b = hankel(order, SERIES_LIMIT);
            assert!((a - b).abs() < 1e-11, "order {order}: {a} vs {b}");
        }
    }

    #[test]
    fn bessel_parity() {
        assert_eq!(bessel_j1(-3.0), -bessel_j1(3.0));
        assert_eq!(bessel_j0(-3.0), bessel_j0(3.0));
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m38: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((m38 - 2.0 / 39.0).abs() < 1e-14);
        assert!((integrate(f64::sin, 0.0, PI, 4) - 2.0).abs() < 1e-14);
    }
}
