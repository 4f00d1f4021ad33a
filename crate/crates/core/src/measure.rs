//! Log-space volumes of epsilon-balls and of their orbits.
//!
//! The orbit of a ball under `|G|` label-preserving transforms has volume at
//! most `|G| * pi^(k/2) / Gamma(k/2 + 1) * eps^k`. Everything is computed in
//! natural-log space because the raw volumes leave the `f64` range long before
//! the dimensions of interest.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::special::ln_gamma;
use crate::symmetry::SymmetryClass;

/// One point of an orbit-volume bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurvePoint {
    pub k: u64,
    pub epsilon: f64,
    pub log_ball_volume: f64,
    pub log_sym_count: f64,
    /// `log_sym_count + log_ball_volume`.
    pub log_orbit_bound: f64,
}

impl BoundCurvePoint {
    fn new(k: u64, epsilon: f64, log_sym_count: f64, log_ball_volume: f64) -> Self {
        Self {
            k,
            epsilon,
            log_ball_volume,
            log_sym_count,
            log_orbit_bound: log_sym_count + log_ball_volume,
        }
    }

    /// The bound capped at the measure of the unit cube, `min(bound, 0)`.
    pub fn log_orbit_bound_capped(&self) -> f64 {
        self.log_orbit_bound.min(0.0)
    }
}

fn check_args(k: u64, epsilon: f64) -> Result<()> {
    if k == 0 {
        return invalid("dimension k must be at least 1");
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return invalid(format!(
            "epsilon must be positive and finite, got {epsilon}"
        ));
    }
    Ok(())
}

/// `ln` of the volume of a radius-`epsilon` ball in `k` dimensions.
pub fn log_ball_volume(k: u64, epsilon: f64) -> Result<f64> {
    check_args(k, epsilon)?;
    let half = k as f64 / 2.0;
    Ok(half * PI.ln() - ln_gamma(half + 1.0) + k as f64 * epsilon.ln())
}

/// `ln` of the orbit-volume upper bound for symmetry class `sym`.
pub fn orbit_volume_bound(k: u64, epsilon: f64, sym: SymmetryClass) -> Result<f64> {
    Ok(bound_point(k, epsilon, sym, false)?.log_orbit_bound)
}

fn bound_point(
    k: u64,
    epsilon: f64,
    sym: SymmetryClass,
    adjusted: bool,
) -> Result<BoundCurvePoint> {
    let ball = log_ball_volume(k, epsilon)?;
    let mut count = sym.log_count(k);
    if adjusted {
        count += (k as f64).ln();
    }
    Ok(BoundCurvePoint::new(k, epsilon, count, ball))
}

fn check_range(ks: &[u64]) -> Result<()> {
    if ks.is_empty() {
        return invalid("dimension range is empty");
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("dimension range must be strictly increasing");
    }
    Ok(())
}

pub fn bound_curve(ks: &[u64], epsilon: f64, sym: SymmetryClass) -> Result<Vec<BoundCurvePoint>> {
    check_range(ks)?;
    ks.iter()
        .map(|&k| bound_point(k, epsilon, sym, false))
        .collect()
}

/// Average number of input points behind one feature vector, `k / r`.
pub fn feature_preimage_factor(k: u64, r: u64) -> Result<f64> {
    if r == 0 || r > k {
        return invalid(format!("need k >= r >= 1, got k = {k}, r = {r}"));
    }
    Ok(k as f64 / r as f64)
}

/// Bound curve with the symmetry count multiplied by `k` to account for the
/// `r` feature-space points each standing for `k / r` input points.
pub fn adjusted_bound_curve(
    ks: &[u64],
    epsilon: f64,
    sym: SymmetryClass,
) -> Result<Vec<BoundCurvePoint>> {
    check_range(ks)?;
    ks.iter()
        .map(|&k| bound_point(k, epsilon, sym, true))
        .collect()
}

/// One row of the resolution curve: an `m x m` image with `channels` channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigationRow {
    pub side: u64,
    pub channels: u64,
    pub point: BoundCurvePoint,
}

/// Image-class bound as a function of image side `m`, with `k = channels * m^2`.
pub fn resolution_mitigation_curve(
    sides: &[u64],
    channels: u64,
    epsilon: f64,
) -> Result<Vec<MitigationRow>> {
    if !matches!(channels, 1 | 3) {
        return invalid(format!("channels must be 1 or 3, got {channels}"));
    }
    check_range(sides)?;
    let ks: Vec<u64> = sides.iter().map(|&m| channels * m * m).collect();
    let curve = bound_curve(&ks, epsilon, SymmetryClass::ImagePoly)?;
    Ok(sides
        .iter()
        .zip(curve)
        .map(|(&side, point)| MitigationRow {
            side,
            channels,
            point,
        })
        .collect())
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

pub fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

/// The second half of `values` (the middle element included for odd lengths).
pub fn tail_half(values: &[f64]) -> &[f64] {
    &values[values.len() / 2..]
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn lbv(k: u64, eps: f64) -> f64 {
        log_ball_volume(k, eps).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert!((lbv(2, 1.0) - PI.ln()).abs() < 1e-12);
        assert!((lbv(2, 1.0) - 1.144_729_885_8).abs() < 1e-10);
        assert!((lbv(3, 1.0) - (4.0 * PI / 3.0).ln()).abs() < 1e-12);
        assert!((lbv(3, 1.0) - 1.432_411_958_3).abs() < 1e-10);
        assert!(lbv(1, 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(log_ball_volume(0, 1.0).is_err());
        assert!(log_ball_volume(3, 0.0).is_err());
        assert!(log_ball_volume(3, -1.0).is_err());
        assert!(log_ball_volume(3, f64::NAN).is_err());
        assert!(feature_preimage_factor(3, 4).is_err());
        assert!(feature_preimage_factor(3, 0).is_err());
        assert!(bound_curve(&[], 0.5, SymmetryClass::ImagePoly).is_err());
        assert!(bound_curve(&[5, 5], 0.5, SymmetryClass::ImagePoly).is_err());
        assert!(resolution_mitigation_curve(&[4], 2, 0.1).is_err());
    }

    #[test]
    fn orbit_bound_values() {
        let img = orbit_volume_bound(2, 1.0, SymmetryClass::ImagePoly).unwrap();
        assert!((img - (4f64.ln() + PI.ln())).abs() < 1e-12);

        // 50-digit references.
        let img100 = orbit_volume_bound(100, 0.5, SymmetryClass::ImagePoly).unwrap();
        let want = -151.345_650_343_321_371_566_017_1;
        assert!(((img100 - want) / want).abs() < 1e-9, "{img100}");
        let graph100 = orbit_volume_bound(100, 0.5, SymmetryClass::GraphFactorial).unwrap();
        let want = 203.183_384_840_265_935_841_991;
        assert!(((graph100 - want) / want).abs() < 1e-9, "{graph100}");
        assert!(graph100 > 0.0);
        assert!(graph100 - img100 > 300.0);
        // Stirling cross-check of the gap: ln 100! - 2 ln 100.
        let n = 100.0f64;
        let stirling = n * n.ln() - n + 0.5 * (2.0 * PI * n).ln() + 1.0 / (12.0 * n);
        assert!(((graph100 - img100) - (stirling - 2.0 * n.ln())).abs() < 1e-6);
    }

    #[test]
    fn curves_and_dichotomy() {
        let ks: Vec<u64> = (10..=200).collect();
        let img = bound_curve(&ks, 0.5, SymmetryClass::ImagePoly).unwrap();
        let at =
            |c: &[BoundCurvePoint], k: u64| c.iter().find(|p| p.k == k).unwrap().log_orbit_bound;
        assert!(at(&img, 200) < at(&img, 100) && at(&img, 100) < at(&img, 50));
        let graph = bound_curve(&ks, 0.5, SymmetryClass::GraphFactorial).unwrap();
        assert!(at(&graph, 200) > at(&graph, 100));

        let img_vals: Vec<f64> = img.iter().map(|p| p.log_orbit_bound).collect();
        let graph_vals: Vec<f64> = graph.iter().map(|p| p.log_orbit_bound).collect();
        assert!(strictly_decreasing(tail_half(&img_vals)));
        assert!(strictly_increasing(tail_half(&graph_vals)));

        for p in img.iter().chain(&graph) {
            assert_eq!(p.log_orbit_bound, p.log_sym_count + p.log_ball_volume);
            assert!(p.log_orbit_bound_capped() <= 0.0);
        }

        let single = bound_curve(&[37], 0.5, SymmetryClass::GraphFactorial).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(
            single[0].log_orbit_bound,
            orbit_volume_bound(37, 0.5, SymmetryClass::GraphFactorial).unwrap()
        );
    }

    #[test]
    fn image_tail_decreases_for_small_radii() {
        for eps in [0.1, 0.5, 1.0] {
            let ks: Vec<u64> = (2..=60).collect();
            let vals: Vec<f64> = bound_curve(&ks, eps, SymmetryClass::ImagePoly)
                .unwrap()
                .iter()
                .map(|p| p.log_orbit_bound)
                .collect();
            assert!(strictly_decreasing(tail_half(&vals)), "eps = {eps}");
        }
    }

    #[test]
    fn preimage_factor_and_adjusted_curve() {
        assert_eq!(feature_preimage_factor(12, 3).unwrap(), 4.0);
        assert_eq!(feature_preimage_factor(7, 7).unwrap(), 1.0);
        let adj = adjusted_bound_curve(&[50, 100, 200], 0.5, SymmetryClass::ImagePoly).unwrap();
        let vals: Vec<f64> = adj.iter().map(|p| p.log_orbit_bound).collect();
        assert!(strictly_decreasing(&vals));
        let plain = bound_curve(&[50], 0.5, SymmetryClass::ImagePoly).unwrap();
        assert!((adj[0].log_sym_count - plain[0].log_sym_count - 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn mitigation_curve() {
        let rows = resolution_mitigation_curve(&[4, 8, 16, 32], 3, 0.1).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.point.k).collect::<Vec<_>>(),
            vec![48, 192, 768, 3072]
        );
        let vals: Vec<f64> = rows.iter().map(|r| r.point.log_orbit_bound).collect();
        assert!(strictly_decreasing(&vals[1..]));
        assert_eq!(resolution_mitigation_curve(&[9], 1, 0.1).unwrap().len(), 1);
        for m in [2u64, 4, 8, 16] {
            let one = resolution_mitigation_curve(&[m], 1, 0.1).unwrap()[0]
                .point
                .log_orbit_bound;
            let three = resolution_mitigation_curve(&[m], 3, 0.1).unwrap()[0]
                .point
                .log_orbit_bound;
            assert!(three < one, "m = {m}");
        }
    }

    #[test]
    fn unit_ball_volume_peaks_in_five_dimensions() {
        assert!(lbv(5, 1.0) > lbv(4, 1.0));
        assert!(lbv(5, 1.0) > lbv(6, 1.0));
        let best = (1..=30)
            .max_by(|&a, &b| lbv(a, 1.0).total_cmp(&lbv(b, 1.0)))
            .unwrap();
        assert_eq!(best, 5);
    }

    #[test]
    fn large_dimension_limits() {
        for eps in [0.5, 3.0, 10.0] {
            assert!(lbv(10_000, eps) < -1000.0, "eps = {eps}");
            assert!(lbv(10_000, eps).is_finite());
        }
        let vals: Vec<f64> = (2..=200).map(|k| lbv(k, 0.9)).collect();
        assert!(strictly_decreasing(&vals[5..]));
    }

    #[test]
    fn scaling_law() {
        for k in [1u64, 2, 7, 100, 5000] {
            for (a, eps) in [(2.0, 0.1), (0.3, 1.5), (10.0, 0.01)] {
                let diff = lbv(k, a * eps) - lbv(k, eps);
                let want = k as f64 * f64::ln(a);
                assert!(
                    (diff - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "k={k} a={a}"
                );
            }
        }
    }
}
