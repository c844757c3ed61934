//! Shared numeric helpers: normal CDF/quantile, generic CDF inversion, and
//! the modified Bessel function needed by the Cramer-von Mises limit law.

use statrs::function::erf;

/// Standard normal CDF via the complementary error function.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub(crate) fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile.
///
/// Starts from the erf-inverse approximation and polishes with Newton steps
/// against `normal_cdf`, so the round trip holds to near machine precision.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0,1)");
    let mut q = -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p);
    for _ in 0..3 {
        let err = normal_cdf(q) - p;
        if err == 0.0 {
            break;
        }
        let d = normal_pdf(q);
        if d <= f64::MIN_POSITIVE {
            break;
        }
        q -= err / d;
    }
    q
}

/// Invert a monotone CDF on the positive half-line by bracketed bisection.
///
/// `hint` seeds the upper-bracket search; any positive value works, a scale
/// near the distribution's bulk just converges faster.
pub(crate) fn invert_cdf_positive<F: Fn(f64) -> f64>(cdf: F, p: f64, hint: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let mut hi = if hint.is_finite() && hint > 0.0 {
        hint
    } else {
        1.0
    };
    let mut lo = 0.0_f64;
    let mut grow = 0;
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2000 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval exhausted at f64 resolution
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Modified Bessel function of the second kind, order 1/4.
///
/// Computed from the integral representation
/// `K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`
/// with Simpson quadrature on a truncated range. Accurate to ~1e-12 relative
/// for the arguments that arise in the Cramer-von Mises limit series.
pub(crate) fn bessel_k_quarter(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z > 700.0 {
        return 0.0; // exp(-z) underflows any practical use downstream
    }
    // Truncate where the integrand falls ~1e-20 below its t=0 value.
    let t_max = ((1.0 + 50.0 / z) + ((1.0 + 50.0 / z) * (1.0 + 50.0 / z) - 1.0).sqrt()).ln();
    let n = 2048; // even
    let h = t_max / n as f64;
    let f = |t: f64| (-z * t.cosh()).exp() * (0.25 * t).cosh();
    let mut sum = f(0.0) + f(t_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_round_trip() {
        for &p in &[1e-8, 0.001, 0.1, 0.5, 0.9, 0.985, 0.9995, 1.0 - 1e-9] {
            let q = normal_quantile(p);
            assert!(
                (normal_cdf(q) - p).abs() < 1e-14,
                "round trip failed at p={p}: cdf(q)={}",
                normal_cdf(q)
            );
        }
    }

    #[test]
    fn normal_quantile_matches_reference() {
        // Two-sided z values used by the confidence-interval tables.
        assert!((normal_quantile(0.9) - 1.2815515655).abs() < 1e-9);
        assert!((normal_quantile(0.995) - 2.5758293035).abs() < 1e-9);
        assert!((normal_quantile(0.9995) - 3.2905267315).abs() < 1e-9);
    }

    #[test]
    fn invert_cdf_recovers_exponential_quantile() {
        let cdf = |x: f64| 1.0 - (-0.156 * x).exp();
        for &p in &[0.01, 0.5, 0.99] {
            let q = invert_cdf_positive(cdf, p, 1.0);
            assert!((cdf(q) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn bessel_k_quarter_reference_values() {
        // Independently computed reference values (scipy.special.kv).
        assert!((bessel_k_quarter(1.0) - 0.4307397744485814).abs() < 1e-10);
        assert!((bessel_k_quarter(0.5) - 0.9603163249318826).abs() < 1e-10);
        assert!((bessel_k_quarter(0.05) - 3.5877375452640217).abs() < 1e-9);
        assert!((bessel_k_quarter(10.0) - 1.7833184439806395e-5).abs() < 1e-15);
    }
}
