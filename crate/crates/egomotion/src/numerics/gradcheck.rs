//! Central finite-difference utilities used to verify every hand-derived
//! backward pass. Only forward evaluations are used here, so the oracle stays
//! independent of the code it checks.

/// Central-difference gradient of `f` at `theta`: (f(x+h) - f(x-h)) / 2h per
/// coordinate. `f` must be a pure function of its argument.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, theta: &[f64], step: f64) -> Vec<f64> {
    let mut work = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + step;
        let fp = f(&work);
        work[i] = orig - step;
        let fm = f(&work);
        work[i] = orig;
        out.push((fp - fm) / (2.0 * step));
    }
    out
}

/// Worst relative error between two gradient vectors. Differences below
/// `abs_floor` pass regardless of relative size, which keeps near-zero
/// gradients from being judged by noise.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], abs_floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut worst = 0.0f64;
    for (&a, &n) in analytic.iter().zip(numeric.iter()) {
        let diff = (a - n).abs();
        if diff <= abs_floor {
            continue;
        }
        let rel = diff / a.abs().max(n.abs());
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_on_quadratic_is_near_exact() {
        // f(x) = sum x_i^2, df/dx_i = 2 x_i; a quadratic makes the central
        // difference exact up to floating-point rounding.
        let theta = vec![0.3, -1.7, 2.5];
        let g = central_difference(&mut |x| x.iter().map(|v| v * v).sum(), &theta, 1e-5);
        for (gi, ti) in g.iter().zip(theta.iter()) {
            assert!((gi - 2.0 * ti).abs() < 1e-9, "{gi} vs {}", 2.0 * ti);
        }
    }

    #[test]
    fn abs_floor_forgives_tiny_disagreements() {
        let err = max_relative_error(&[1e-12], &[5e-12], 1e-8);
        assert_eq!(err, 0.0);
        let err = max_relative_error(&[1.0], &[1.0 + 2e-4], 1e-8);
        assert!(err > 1e-4);
    }
}
