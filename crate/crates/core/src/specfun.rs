//! Orthogonal polynomials and Gauss-Legendre quadrature.
//!
//! Every polynomial is evaluated by its forward three-term recurrence. Inputs
//! restricted to `[-1, 1]` are clamped when they overshoot by at most
//! [`DEFAULT_CLAMP`] (or a caller-supplied tolerance) and rejected otherwise.

use crate::error::{Error, Result};

/// Polynomial degree or index.
pub type PolyDegree = u32;

/// Default roundoff allowance for arguments that must lie in `[-1, 1]`.
pub const DEFAULT_CLAMP: f64 = 1e-12;

/// Clamp `x` into `[-1, 1]` if it lies within `eps` of the interval.
pub fn clamp_unit(x: f64, eps: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {x}")));
    }
    if x.abs() > 1.0 + eps {
        return Err(Error::Domain(format!(
            "argument {x} outside [-1, 1] (clamp tolerance {eps:e})"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Chebyshev polynomial of the first kind, `T_n(x)`.
pub fn chebyshev_t(n: PolyDegree, x: f64) -> Result<f64> {
    chebyshev_t_tol(n, x, DEFAULT_CLAMP)
}

/// [`chebyshev_t`] with an explicit clamp tolerance.
pub fn chebyshev_t_tol(n: PolyDegree, x: f64, eps: f64) -> Result<f64> {
    let x = clamp_unit(x, eps)?;
    Ok(chebyshev_recurrence(n, x, x))
}

/// Chebyshev polynomial of the second kind, `U_n(x)`.
pub fn chebyshev_u(n: PolyDegree, x: f64) -> Result<f64> {
    chebyshev_u_tol(n, x, DEFAULT_CLAMP)
}

/// [`chebyshev_u`] with an explicit clamp tolerance.
pub fn chebyshev_u_tol(n: PolyDegree, x: f64, eps: f64) -> Result<f64> {
    let x = clamp_unit(x, eps)?;
    Ok(chebyshev_recurrence(n, x, 2.0 * x))
}

// T and U share the recurrence y_{n+1} = 2x y_n - y_{n-1}; only y_1 differs.
fn chebyshev_recurrence(n: PolyDegree, x: f64, first: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = (1.0, first);
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Generalized Laguerre polynomial `L_n^alpha(x)`.
pub fn laguerre(n: PolyDegree, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::Domain(format!("Laguerre parameter {alpha} must exceed -1")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("Laguerre argument {x} must be non-negative")));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let (mut prev, mut cur) = (1.0, 1.0 + alpha - x);
    for j in 1..n {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + alpha - x) * cur - (j + alpha) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Jacobi polynomial `P_m^{(a,b)}(x)`.
pub fn jacobi(m: PolyDegree, a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > -1.0 && b > -1.0) {
        return Err(Error::Domain(format!("Jacobi parameters ({a}, {b}) must exceed -1")));
    }
    let x = clamp_unit(x, DEFAULT_CLAMP)?;
    if m == 0 {
        return Ok(1.0);
    }
    let ab = a + b;
    let (mut prev, mut cur) = (1.0, (a + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0));
    for n in 2..=m {
        let n = n as f64;
        let s = 2.0 * n + ab;
        let lead = 2.0 * n * (n + ab) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c2 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s;
        let next = (c1 * cur - c2 * prev) / lead;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Gauss-Legendre rule with `n` points mapped onto `[lo, hi]`.
///
/// Returns `(node, weight)` pairs in increasing node order. The rule is exact
/// for polynomials of degree `2n - 1`.
pub fn quadrature_nodes(n: usize, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("degenerate interval [{lo}, {hi}]")));
    }
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Newton on P_n starting from the Tricomi estimate; roots come out descending.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((mid - half * x, half * w));
    }
    Ok(rule)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 1..n {
        let j = j as f64;
        let next = ((2.0 * j + 1.0) * x * cur - j * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    let d = n as f64 * (x * cur - prev) / (x * x - 1.0);
    (cur, d)
}

/// Composite Gauss-Legendre integral of `f` over `[lo, hi]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    panels: usize,
    order: usize,
) -> Result<f64> {
    let panels = panels.max(1);
    let base = quadrature_nodes(order, 0.0, 1.0)?;
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + width * p as f64;
        for &(x, w) in &base {
            total += w * width * f(a + width * x);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_t(0, 0.37).unwrap(), 1.0);
        assert_abs_diff_eq!(chebyshev_t(2, 0.5).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(chebyshev_t(3, 0.8).unwrap(), -0.352, epsilon = 1e-15);
        assert_eq!(chebyshev_u(0, -0.9).unwrap(), 1.0);
        assert_abs_diff_eq!(chebyshev_u(1, 0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(chebyshev_u(2, 0.5).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn chebyshev_clamp_and_domain() {
        assert_eq!(chebyshev_t(5, 1.0 + 5e-13).unwrap(), 1.0);
        assert!(matches!(chebyshev_t(2, 1.0 + 1e-9), Err(Error::Domain(_))));
        assert!(matches!(chebyshev_u(2, -1.5), Err(Error::Domain(_))));
        assert!(chebyshev_t_tol(2, 1.0 + 1e-9, 1e-8).is_ok());
    }

    #[test]
    fn chebyshev_matches_trig_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-0.999..0.999);
            let th = x.acos();
            for n in 0..=30u32 {
                let t = chebyshev_t(n, x).unwrap();
                assert_abs_diff_eq!(t, (n as f64 * th).cos(), epsilon = 1e-12);
                let u = chebyshev_u(n, x).unwrap();
                let closed = ((n as f64 + 1.0) * th).sin() / th.sin();
                assert!((u - closed).abs() <= 1e-12 * (1.0 + closed.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn pell_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            for n in 1..=30u32 {
                let t = chebyshev_t(n, x).unwrap();
                let u = chebyshev_u(n - 1, x).unwrap();
                assert_abs_diff_eq!(t * t + (1.0 - x * x) * u * u, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn laguerre_examples() {
        assert_eq!(laguerre(0, 2.5, 7.0).unwrap(), 1.0);
        assert_abs_diff_eq!(laguerre(1, 2.0, 1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(laguerre(2, 0.0, 1.0).unwrap(), -0.5, epsilon = 1e-15);
        assert!(matches!(laguerre(2, -1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(0, 0.5, 0.5, 0.1).unwrap(), 1.0);
        assert_abs_diff_eq!(jacobi(1, 0.0, 0.0, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(jacobi(1, 0.5, 0.5, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(jacobi(3, -1.0, 0.0, 0.2), Err(Error::Domain(_))));
        // P_n^{(0,0)} is Legendre: P_3(x) = (5x^3 - 3x)/2.
        let x: f64 = 0.3;
        assert_abs_diff_eq!(
            jacobi(3, 0.0, 0.0, x).unwrap(),
            0.5 * (5.0 * x.powi(3) - 3.0 * x),
            epsilon = 1e-15
        );
    }

    // Second-order central differences: residual shrinks like h^2.
    fn ode_residual(h: f64, f: impl Fn(f64) -> f64, ode: impl Fn(f64, f64, f64, f64) -> f64, x: f64) -> f64 {
        let y = f(x);
        let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = (f(x + h) - 2.0 * y + f(x - h)) / (h * h);
        ode(x, y, d1, d2)
    }

    #[test]
    fn laguerre_satisfies_its_ode() {
        for &(n, alpha) in &[(3u32, 0.5), (5, 2.0), (7, 1.3)] {
            let f = |x: f64| laguerre(n, alpha, x).unwrap();
            let ode = |x: f64, y: f64, d1: f64, d2: f64| x * d2 + (alpha + 1.0 - x) * d1 + n as f64 * y;
            let x = 1.7;
            let r1 = ode_residual(1e-2, f, ode, x).abs();
            let r2 = ode_residual(5e-3, f, ode, x).abs();
            assert!(r2 < 0.3 * r1 + 1e-9, "n={n}: {r1} -> {r2}");
            assert!(r2 < 1e-3);
        }
    }

    #[test]
    fn jacobi_satisfies_its_ode() {
        for &(m, a, b) in &[(2u32, 0.5, 0.5), (4, 1.5, 0.2), (6, 0.0, 2.5)] {
            let f = |x: f64| jacobi(m, a, b, x).unwrap();
            let mf = m as f64;
            let ode = |x: f64, y: f64, d1: f64, d2: f64| {
                (1.0 - x * x) * d2 + (b - a - (a + b + 2.0) * x) * d1 + mf * (mf + a + b + 1.0) * y
            };
            let x = 0.31;
            let r1 = ode_residual(1e-2, f, ode, x).abs();
            let r2 = ode_residual(5e-3, f, ode, x).abs();
            assert!(r2 < 0.3 * r1 + 1e-9, "m={m}: {r1} -> {r2}");
        }
    }

    #[test]
    fn quadrature_examples() {
        let one = quadrature_nodes(1, -1.0, 1.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0].0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one[0].1, 2.0, epsilon = 1e-15);

        let two = quadrature_nodes(2, -1.0, 1.0).unwrap();
        let s: f64 = two.iter().map(|&(x, w)| w * x * x).sum();
        assert_abs_diff_eq!(s, 2.0 / 3.0, epsilon = 1e-14);

        let three = quadrature_nodes(3, 0.0, 1.0).unwrap();
        let s: f64 = three.iter().map(|&(x, w)| w * x.powi(5)).sum();
        assert_abs_diff_eq!(s, 1.0 / 6.0, epsilon = 1e-14);

        assert!(quadrature_nodes(0, 0.0, 1.0).is_err());
        assert!(quadrature_nodes(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn quadrature_exactness_high_order() {
        for n in 1..=40usize {
            let rule = quadrature_nodes(n, -2.0, 3.0).unwrap();
            let deg = 2 * n - 1;
            let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
            let exact = (3f64.powi(deg as i32 + 1) - (-2f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
            assert!((s - exact).abs() <= 1e-12 * exact.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn composite_integral() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 8, 10).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-14);
    }
}
