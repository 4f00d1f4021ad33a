//! Log-gamma for positive arguments.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this the argument is shifted upward before the asymptotic series.
const SERIES_START: f64 = 15.0;

/// `ln Gamma(x)`.
///
/// Positive arguments are shifted to `x >= 15` with the recurrence
/// `Gamma(x+1) = x Gamma(x)` and evaluated with the Stirling series through the
/// `x^-13` term, giving close to full double precision. Negative non-integers
/// go through the reflection formula and return `ln |Gamma(x)|`. Poles return
/// `+inf`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        if x == x.floor() {
            return f64::INFINITY;
        }
        // |Gamma(x)| = pi / (|sin(pi x)| Gamma(1 - x))
        return PI.ln() - (PI * x).sin().abs().ln() - ln_gamma(1.0 - x);
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }

    let mut z = x;
    let mut product = 1.0;
    while z < SERIES_START {
        product *= z;
        z += 1.0;
    }
    stirling(z) - product.ln()
}

fn stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2j} / (2j (2j-1)), Horner form in 1/z^2.
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2
                                        * (1.0 / 1188.0
                                            + inv2
                                                * (-691.0 / 360_360.0 + inv2 * (1.0 / 156.0)))))));
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series
}
