//! Label-only boundary attack behind a query budget.
//!
//! The attacker only sees labels, and only through a [`CountingOracle`] that
//! refuses to evaluate anything past its [`ThrottlePolicy`]. The search first
//! bisects the segment between the original point and a seed point of a
//! different label, then repeatedly steps the current adversarial point
//! sideways (orthogonal to its offset from the original), and bisects back
//! toward the original, keeping whichever adversarial point is closest.

use std::cell::Cell;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::error::{invalid, Error, Result};
use crate::model::{clip_in_place, euclidean, DecisionFunction, Point};
use crate::rng::{seeded_stream, SeededStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("query budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("rate limit of {limit} queries per {window} rounds reached")]
    RateLimited { limit: u64, window: u64 },
}

/// Query limits imposed on an attacker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThrottlePolicy {
    pub max_queries: u64,
    /// Optional `(window_size, window_limit)`: at most `window_limit` queries
    /// in each block of `window_size` attack rounds.
    pub window: Option<(u64, u64)>,
}

impl ThrottlePolicy {
    pub fn budget(max_queries: u64) -> Self {
        Self {
            max_queries,
            window: None,
        }
    }

    pub fn with_window(mut self, window_size: u64, window_limit: u64) -> Result<Self> {
        if window_size == 0 {
            return invalid("window size must be positive");
        }
        self.window = Some((window_size, window_limit));
        Ok(self)
    }
}

/// Wraps a classifier and counts every evaluation against a policy.
pub struct CountingOracle<'a, F: DecisionFunction + ?Sized> {
    inner: &'a F,
    policy: ThrottlePolicy,
    count: Cell<u64>,
    round: Cell<u64>,
    window_start: Cell<u64>,
    window_count: Cell<u64>,
}

impl<'a, F: DecisionFunction + ?Sized> CountingOracle<'a, F> {
    pub fn new(inner: &'a F, policy: ThrottlePolicy) -> Self {
        Self {
            inner,
            policy,
            count: Cell::new(0),
            round: Cell::new(0),
            window_start: Cell::new(0),
            window_count: Cell::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.count.get()
    }

    pub fn policy(&self) -> ThrottlePolicy {
        self.policy
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Advances the round clock used by the rate window.
    pub fn next_round(&self) {
        self.round.set(self.round.get() + 1);
    }

    pub fn query(&self, x: &[f64]) -> std::result::Result<usize, OracleError> {
        if self.count.get() >= self.policy.max_queries {
            return Err(OracleError::BudgetExhausted(self.policy.max_queries));
        }
        if let Some((size, limit)) = self.policy.window {
            let start = self.round.get() / size * size;
            if start != self.window_start.get() {
                self.window_start.set(start);
                self.window_count.set(0);
            }
            if self.window_count.get() >= limit {
                return Err(OracleError::RateLimited {
                    limit,
                    window: size,
                });
            }
            self.window_count.set(self.window_count.get() + 1);
        }
        self.count.set(self.count.get() + 1);
        Ok(self.inner.label_of(x))
    }

    /// Evaluates without touching the counter; for bookkeeping outside the attack.
    pub fn unmetered(&self, x: &[f64]) -> usize {
        self.inner.label_of(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub tolerance: f64,
    pub seed: u64,
    pub max_rounds: u64,
}

impl AttackConfig {
    pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;

    pub fn new(tolerance: f64, seed: u64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return invalid(format!("tolerance must be positive, got {tolerance}"));
        }
        Ok(Self {
            tolerance,
            seed,
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based index of the query that produced this entry.
    pub query_index: u64,
    pub best_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    Budget(OracleError),
    MaxRounds,
    /// The point has no orthogonal directions to explore (dimension 1).
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackTrace {
    pub log: Vec<TraceEntry>,
    pub best_point: Vec<f64>,
    pub final_distance: f64,
    /// The first bisection reached a bracket no wider than the tolerance.
    pub success: bool,
    /// Unmetered post-hoc check that `best_point` is labelled differently.
    pub verified: bool,
    pub queries_used: u64,
    pub seed: u64,
    pub halt: HaltReason,
}

struct Search<'o, 'a, F: DecisionFunction + ?Sized> {
    oracle: &'o CountingOracle<'a, F>,
    origin: Vec<f64>,
    origin_label: usize,
    best: Vec<f64>,
    best_distance: f64,
    log: Vec<TraceEntry>,
}

impl<F: DecisionFunction + ?Sized> Search<'_, '_, F> {
    fn query(&mut self, x: &[f64]) -> std::result::Result<usize, OracleError> {
        let label = self.oracle.query(x)?;
        if label != self.origin_label {
            let d = euclidean(&self.origin, x);
            if d < self.best_distance {
                self.best_distance = d;
                self.best = x.to_vec();
            }
        }
        self.log.push(TraceEntry {
            query_index: self.oracle.queries(),
            best_distance: self.best_distance,
        });
        Ok(label)
    }

    /// Bisects `[origin, outer]` (with `outer` known adversarial) down to the
    /// tolerance; returns the adversarial end.
    fn bisect(
        &mut self,
        outer: &[f64],
        tolerance: f64,
    ) -> std::result::Result<Vec<f64>, OracleError> {
        let origin = self.origin.clone();
        let length = euclidean(&origin, outer);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let at = |t: f64| -> Vec<f64> {
            origin
                .iter()
                .zip(outer)
                .map(|(p, q)| p + t * (q - p))
                .collect()
        };
        while (hi - lo) * length > tolerance {
            let mid = 0.5 * (lo + hi);
            if self.query(&at(mid))? == self.origin_label {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(at(hi))
    }
}

fn orthogonal_direction(rng: &mut SeededStream, offset: &[f64]) -> Option<Vec<f64>> {
    let norm2: f64 = offset.iter().map(|v| v * v).sum();
    for _ in 0..64 {
        let mut u: Vec<f64> = (0..offset.len())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        if norm2 > 0.0 {
            let proj = u.iter().zip(offset).map(|(a, b)| a * b).sum::<f64>() / norm2;
            u.iter_mut().zip(offset).for_each(|(a, b)| *a -= proj * b);
        }
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            u.iter_mut().for_each(|v| *v /= n);
            return Some(u);
        }
    }
    None
}

/// Runs the boundary attack from `x_orig` using `x_seed` as the first
/// adversarial point.
pub fn boundary_attack<F>(
    oracle: &CountingOracle<'_, F>,
    x_orig: &Point,
    x_seed: &Point,
    cfg: &AttackConfig,
) -> Result<AttackTrace>
where
    F: DecisionFunction + ?Sized,
{
    for p in [x_orig, x_seed] {
        if p.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: p.dim(),
            });
        }
    }
    let mut search = Search {
        oracle,
        origin: x_orig.coords().to_vec(),
        origin_label: usize::MAX,
        best: x_seed.coords().to_vec(),
        best_distance: x_orig.distance(x_seed),
        log: Vec::new(),
    };
    let finish = |search: Search<'_, '_, F>, success: bool, halt: HaltReason| {
        let verified =
            success && oracle.unmetered(&search.best) != oracle.unmetered(&search.origin);
        AttackTrace {
            log: search.log,
            final_distance: search.best_distance,
            best_point: search.best,
            success,
            verified,
            queries_used: oracle.queries(),
            seed: cfg.seed,
            halt,
        }
    };

    // Endpoint verification.
    let origin_label = match oracle.query(x_orig.coords()) {
        Ok(l) => l,
        Err(e) => return Ok(finish(search, false, HaltReason::Budget(e))),
    };
    search.origin_label = origin_label;
    search.log.push(TraceEntry {
        query_index: oracle.queries(),
        best_distance: search.best_distance,
    });
    match search.query(x_seed.coords()) {
        Ok(l) if l == origin_label => return Err(Error::SameLabel(l)),
        Ok(_) => {}
        Err(e) => return Ok(finish(search, false, HaltReason::Budget(e))),
    }

    let mut current = match search.bisect(x_seed.coords(), cfg.tolerance) {
        Ok(p) => p,
        Err(e) => return Ok(finish(search, false, HaltReason::Budget(e))),
    };

    let mut rng = seeded_stream(cfg.seed, 0);
    let mut scale = 1.0;
    let mut failures = 0;
    for _ in 0..cfg.max_rounds {
        oracle.next_round();
        let offset: Vec<f64> = current
            .iter()
            .zip(&search.origin)
            .map(|(c, o)| c - o)
            .collect();
        let Some(dir) = orthogonal_direction(&mut rng, &offset) else {
            return Ok(finish(search, true, HaltReason::Converged));
        };
        let distance = euclidean(&current, &search.origin);
        let eta = (0.1 * distance * scale).max(1e-6);
        let mut candidate: Vec<f64> = current.iter().zip(&dir).map(|(c, u)| c + eta * u).collect();
        clip_in_place(&mut candidate);

        let before = search.best_distance;
        let step = search.query(&candidate).and_then(|label| {
            if label == origin_label {
                Ok(None)
            } else {
                search.bisect(&candidate, cfg.tolerance).map(Some)
            }
        });
        match step {
            Err(e) => return Ok(finish(search, true, HaltReason::Budget(e))),
            Ok(Some(p)) if search.best_distance < before => {
                current = p;
                failures = 0;
            }
            Ok(_) => {
                failures += 1;
                if failures == 3 {
                    scale *= 0.5;
                    failures = 0;
                }
            }
        }
    }
    Ok(finish(search, true, HaltReason::MaxRounds))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub budget: u64,
    pub mean_final_distance: f64,
    pub success_rate: f64,
    pub seeds: usize,
}

/// Runs the attack for every `(budget, seed)` pair and aggregates per budget.
pub fn budget_sweep<F>(
    f: &F,
    x_orig: &Point,
    x_seed: &Point,
    tolerance: f64,
    budgets: &[u64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>>
where
    F: DecisionFunction + ?Sized,
{
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("budgets must be strictly increasing");
    }
    if seeds.is_empty() {
        return invalid("at least one seed is required");
    }
    let cells: Vec<(u64, u64)> = budgets
        .iter()
        .flat_map(|&b| seeds.iter().map(move |&s| (b, s)))
        .collect();
    let traces = cells
        .par_iter()
        .map(|&(budget, seed)| {
            let oracle = CountingOracle::new(f, ThrottlePolicy::budget(budget));
            boundary_attack(
                &oracle,
                x_orig,
                x_seed,
                &AttackConfig::new(tolerance, seed)?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(budgets
        .iter()
        .zip(traces.chunks(seeds.len()))
        .map(|(&budget, group)| SweepRow {
            budget,
            mean_final_distance: group.iter().map(|t| t.final_distance).sum::<f64>()
                / group.len() as f64,
            success_rate: group.iter().filter(|t| t.success).count() as f64 / group.len() as f64,
            seeds: group.len(),
        })
        .collect())
}
