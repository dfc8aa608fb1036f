//! Right-hand sides as plain functions of the segment length `len`, the
//! endpoint derivative magnitudes `a = |f'(a)|`, `b = |f'(b)|` and the
//! exponents. Parameters are assumed already validated.

/// Below this `|log b − log a|` the logarithmic-mean ratios switch to their
/// limits.
pub const LOG_MEAN_EPSILON: f64 = 1e-8;

/// `len (a + b) / 8`
pub fn t31(len: f64, a: f64, b: f64) -> f64 {
    len * (a + b) / 8.0
}

/// Hölder form with `r = p/(p−1)`:
/// `len/16 (4/(p+1))^(1/p) [(3a^r + b^r)^(1/r) + (a^r + 3b^r)^(1/r)]`.
pub fn t32(len: f64, a: f64, b: f64, p: f64) -> f64 {
    let r = p / (p - 1.0);
    let (ar, br) = (a.powf(r), b.powf(r));
    let s = (3.0 * ar + br).powf(1.0 / r) + (ar + 3.0 * br).powf(1.0 / r);
    len / 16.0 * (4.0 / (p + 1.0)).powf(1.0 / p) * s
}

/// `len/16 (4/(p+1))^(1/p) (3^((p−1)/p) + 1)(a + b)`
pub fn t33(len: f64, a: f64, b: f64, p: f64) -> f64 {
    len / 16.0 * (4.0 / (p + 1.0)).powf(1.0 / p) * (3f64.powf((p - 1.0) / p) + 1.0) * (a + b)
}

/// `len/8 [((2a^q + b^q)/3)^(1/q) + ((a^q + 2b^q)/3)^(1/q)]`
pub fn t34(len: f64, a: f64, b: f64, q: f64) -> f64 {
    if q == 1.0 {
        return len / 8.0 * ((2.0 * a + b) / 3.0 + (a + 2.0 * b) / 3.0);
    }
    let (aq, bq) = (a.powf(q), b.powf(q));
    len / 8.0 * (((2.0 * aq + bq) / 3.0).powf(1.0 / q) + ((aq + 2.0 * bq) / 3.0).powf(1.0 / q))
}

/// `len/8 (2^(1/q) + 1)/3^(1/q) (a + b)`
pub fn t35(len: f64, a: f64, b: f64, q: f64) -> f64 {
    len / 8.0 * ((2f64.powf(1.0 / q) + 1.0) / 3f64.powf(1.0 / q)) * (a + b)
}

/// `log b − log a`, accurate when `b` is close to `a`.
fn log_gap(a: f64, b: f64) -> f64 {
    ((b - a) / a).ln_1p()
}

/// `len ((√b − √a)/(log b − log a))²`, with the limit `len·a/4` when the
/// logarithmic gap is below [`LOG_MEAN_EPSILON`]. Needs `a, b > 0`.
pub fn tz(len: f64, a: f64, b: f64) -> f64 {
    let l = log_gap(a, b);
    if l.abs() < LOG_MEAN_EPSILON {
        return len * a / 4.0;
    }
    // √b − √a = √a·expm1(l/2)
    let ratio = (0.5 * l).exp_m1() / l;
    len * a * ratio * ratio
}

/// `(b^(q/2) − a^(q/2))/(log b − log a)`, tending to `(q/2) a^(q/2)`.
pub fn log_mean_ratio(a: f64, b: f64, q: f64) -> f64 {
    let l = log_gap(a, b);
    let base = a.powf(0.5 * q);
    if l.abs() < LOG_MEAN_EPSILON {
        return 0.5 * q * base;
    }
    base * (0.5 * q * l).exp_m1() / l
}

/// `len · a^(1/2) / (2^(1/p) (p+1)^(1/p) q^(1/q)) · ratio^(1/q)` with the
/// logarithmic-mean ratio of [`log_mean_ratio`].
pub fn tfd(len: f64, a: f64, b: f64, p: f64, q: f64) -> f64 {
    let denominator = 2f64.powf(1.0 / p) * (p + 1.0).powf(1.0 / p) * q.powf(1.0 / q);
    len * a.sqrt() / denominator * log_mean_ratio(a, b, q).powf(1.0 / q)
}

/// `len/4 · (a + b)/2`
pub fn t12(len: f64, a: f64, b: f64) -> f64 {
    len / 4.0 * (a + b) / 2.0
}

/// `len/(2(p+1)^(1/p)) [max{a^r, b^r}]^r` with `r = p/(p−1)`, the outer
/// exponent applied once more as stated.
pub fn t22(len: f64, a: f64, b: f64, p: f64) -> f64 {
    let r = p / (p - 1.0);
    len / (2.0 * (p + 1.0).powf(1.0 / p)) * a.powf(r).max(b.powf(r)).powf(r)
}

/// `len/4 · max{a, b}`
pub fn t23(len: f64, a: f64, b: f64) -> f64 {
    len / 4.0 * a.max(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    #[test]
    fn square_on_unit_interval() {
        // |f'(0)| = 0, |f'(1)| = 2
        assert_eq!(t31(1.0, 0.0, 2.0), 0.25);
        let t32_oracle = (4.0f64 / 3.0).sqrt() * (4f64.sqrt() + 12f64.sqrt()) / 16.0;
        assert_relative_eq!(t32(1.0, 0.0, 2.0, 2.0), t32_oracle, max_relative = 1e-15);
        assert_relative_eq!(t32_oracle, 0.394_337_567_297_406_4, max_relative = 1e-12);
        let t33_oracle = (4.0f64 / 3.0).sqrt() * (3f64.sqrt() + 1.0) * 2.0 / 16.0;
        assert_relative_eq!(t33(1.0, 0.0, 2.0, 2.0), t33_oracle, max_relative = 1e-15);
        let t34_oracle = ((4.0f64 / 3.0).sqrt() + (8.0f64 / 3.0).sqrt()) / 8.0;
        assert_relative_eq!(t34(1.0, 0.0, 2.0, 2.0), t34_oracle, max_relative = 1e-15);
        assert_relative_eq!(t34_oracle, 0.348_461_712_529_337_9, max_relative = 1e-12);
        let t35_oracle = (2f64.sqrt() + 1.0) / 3f64.sqrt() * 2.0 / 8.0;
        assert_relative_eq!(t35(1.0, 0.0, 2.0, 2.0), t35_oracle, max_relative = 1e-15);
        assert_eq!(t12(1.0, 0.0, 2.0), 0.25);
        assert_eq!(t23(1.0, 0.0, 2.0), 0.5);
        assert_relative_eq!(
            t22(1.0, 0.0, 2.0, 2.0),
            16.0 / (2.0 * 3f64.sqrt()),
            max_relative = 1e-15
        );
    }

    #[test]
    fn exponential_on_unit_interval() {
        let tz_oracle = (E.sqrt() - 1.0).powi(2);
        assert_relative_eq!(tz(1.0, 1.0, E), tz_oracle, max_relative = 1e-14);
        assert_relative_eq!(tz_oracle, 0.420_839, max_relative = 1e-6);
        let tfd_oracle = (E - 1.0).sqrt() / (2.0 * 3f64.sqrt());
        assert_relative_eq!(tfd(1.0, 1.0, E, 2.0, 2.0), tfd_oracle, max_relative = 1e-14);
        assert_relative_eq!(tfd_oracle, 0.378_404, max_relative = 1e-5);
        assert_relative_eq!(t31(1.0, 1.0, E), (1.0 + E) / 8.0, max_relative = 1e-15);
    }

    #[test]
    fn equal_derivatives_simplify() {
        let (len, c) = (1.7, 0.6);
        for p in [1.1, 1.5, 2.0, 3.0, 10.0] {
            let oracle = len * c / 2.0 * (p + 1.0f64).powf(-1.0 / p);
            assert_relative_eq!(t32(len, c, c, p), oracle, max_relative = 1e-14);
        }
        for q in [1.0, 1.5, 2.0, 5.0] {
            assert_relative_eq!(t34(len, c, c, q), len * c / 4.0, max_relative = 1e-14);
        }
        assert_eq!(t32(len, 0.0, 0.0, 2.0), 0.0);
        assert_eq!(tz(len, c, c), len * c / 4.0);
        // q = 2: len c / (2^(1/p) (p+1)^(1/p) 2^(1/2)) with p = 2
        let oracle = len * c / (2f64.sqrt() * 3f64.sqrt() * 2f64.sqrt());
        assert_relative_eq!(tfd(len, c, c, 2.0, 2.0), oracle, max_relative = 1e-14);
    }

    #[test]
    fn log_mean_limits_are_continuous() {
        for q in [1.5, 2.0, 4.0] {
            let below = log_mean_ratio(1.0, 1.0 + 0.9e-8, q);
            let above = log_mean_ratio(1.0, 1.0 + 1.1e-8, q);
            assert!(((below - above) / below).abs() < 1e-6);
        }
        let below = tz(1.0, 1.0, 1.0 + 0.9e-8);
        let above = tz(1.0, 1.0, 1.0 + 1.1e-8);
        assert!(((below - above) / below).abs() < 1e-6);
        assert!(tz(1.0, 1.0, 1.0 + 1e-300).is_finite());
    }

    #[test]
    fn q_one_reduces_to_t31() {
        for (a, b) in [(0.3, 4.0), (2.0, 0.0), (1e-3, 7.5)] {
            let base = t31(2.5, a, b);
            assert!((t34(2.5, a, b, 1.0) - base).abs() <= 1e-12 * base);
            assert!((t35(2.5, a, b, 1.0) - base).abs() <= 1e-12 * base);
        }
    }
}
