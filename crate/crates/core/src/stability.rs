//! Probe-based epsilon-stability.
//!
//! A point is reported stable when no probe inside its epsilon-ball changes the
//! label. Probes walk `directions` random unit vectors at `steps` evenly spaced
//! radii in `(0, eps]`, clipped to the unit cube. A `true` answer means no
//! violation was found, not that none exists.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{clip_in_place, euclidean, DecisionFunction, Point};
use crate::rng::{seeded_stream, SeededStream};

/// Two-sided 95% normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub epsilon: f64,
    pub directions: u32,
    pub steps: u32,
}

impl ProbeConfig {
    pub fn new(epsilon: f64, directions: u32, steps: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {epsilon}"));
        }
        if directions == 0 || steps == 0 {
            return invalid("directions and steps must be at least 1");
        }
        Ok(Self {
            epsilon,
            directions,
            steps,
        })
    }
}

fn random_unit(rng: &mut SeededStream, dim: usize, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for v in out.iter_mut().take(dim) {
            *v = StandardNormal.sample(rng);
            norm2 += *v * *v;
        }
        if norm2 > 0.0 {
            let norm = norm2.sqrt();
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Probes the ball around `x`; `false` as soon as any probe changes the label.
fn probe_stable<F>(f: &F, x: &[f64], cfg: &ProbeConfig, rng: &mut SeededStream) -> bool
where
    F: DecisionFunction + ?Sized,
{
    let base = f.label_of(x);
    let dim = x.len();
    let mut dir = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    for _ in 0..cfg.directions {
        random_unit(rng, dim, &mut dir);
        for s in 1..=cfg.steps {
            let r = cfg.epsilon * f64::from(s) / f64::from(cfg.steps);
            for ((yi, xi), di) in y.iter_mut().zip(x).zip(&dir) {
                *yi = xi + r * di;
            }
            clip_in_place(&mut y);
            if f.label_of(&y) != base {
                return false;
            }
        }
    }
    true
}

/// Whether no probe within `epsilon` of `x` changes its label. Probes come from
/// stream `(seed, 0)`.
pub fn is_epsilon_stable<F>(f: &F, x: &Point, cfg: &ProbeConfig, seed: u64) -> Result<bool>
where
    F: DecisionFunction + ?Sized,
{
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    let mut rng = seeded_stream(seed, 0);
    Ok(probe_stable(f, x.coords(), cfg, &mut rng))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    pub samples: u64,
    pub unstable_count: u64,
    pub unstable_fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub directions: u32,
    pub steps: u32,
}

impl StabilityReport {
    pub fn ci_half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn ci_contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let low = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let high = if successes == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (low.min(p), high.max(p))
}

/// Monte Carlo estimate of the fraction of the unit cube that is not
/// epsilon-stable. Sample `i` (its position and its probes) uses stream
/// `(seed, i)`, so the report does not depend on the thread count.
pub fn unstable_fraction<F>(
    f: &F,
    cfg: &ProbeConfig,
    samples: u64,
    seed: u64,
) -> Result<StabilityReport>
where
    F: DecisionFunction + ?Sized,
{
    if samples == 0 {
        return invalid("at least one sample is required");
    }
    let dim = f.dim();
    let unstable_count: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded_stream(seed, i);
            let x = rng.unit_point(dim);
            u64::from(!probe_stable(f, &x, cfg, &mut rng))
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(unstable_count, samples, Z_95);
    Ok(StabilityReport {
        epsilon: cfg.epsilon,
        samples,
        unstable_count,
        unstable_fraction: unstable_count as f64 / samples as f64,
        ci_low,
        ci_high,
        seed,
        directions: cfg.directions,
        steps: cfg.steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDistanceEstimate {
    /// Distance from the start point to the same-label end of the final bracket.
    pub distance: f64,
    /// Unit vector from the start point toward the adversarial point.
    pub direction: Vec<f64>,
    /// Same-label end of the final bracket.
    pub inner: Vec<f64>,
    /// Other-label end of the final bracket.
    pub outer: Vec<f64>,
    /// Evaluations spent bisecting.
    pub queries_used: u64,
    /// Evaluations spent checking the two endpoint labels.
    pub endpoint_queries: u64,
    pub tolerance: f64,
    /// Final bracket width along the segment.
    pub bracket: f64,
}

/// Bisects the segment `[x, x_adv]` for a label change until the bracket is no
/// wider than `tolerance`.
pub fn distance_to_boundary<F>(
    f: &F,
    x: &Point,
    x_adv: &Point,
    tolerance: f64,
) -> Result<BoundaryDistanceEstimate>
where
    F: DecisionFunction + ?Sized,
{
    if tolerance.is_nan() || tolerance <= 0.0 {
        return invalid(format!("tolerance must be positive, got {tolerance}"));
    }
    for p in [x, x_adv] {
        if p.dim() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: p.dim(),
            });
        }
    }
    let base = f.label_of(x.coords());
    if f.label_of(x_adv.coords()) == base {
        return Err(Error::SameLabel(base));
    }

    let (a, b) = (x.coords(), x_adv.coords());
    let length = euclidean(a, b);
    let at = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut queries = 0;
    while (hi - lo) * length > tolerance {
        let mid = 0.5 * (lo + hi);
        queries += 1;
        if f.label_of(&at(mid)) == base {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let direction = a.iter().zip(b).map(|(p, q)| (q - p) / length).collect();
    let inner = at(lo);
    Ok(BoundaryDistanceEstimate {
        distance: euclidean(a, &inner),
        direction,
        inner,
        outer: at(hi),
        queries_used: queries,
        endpoint_queries: 2,
        tolerance,
        bracket: (hi - lo) * length,
    })
}
