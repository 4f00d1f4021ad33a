//! Usefulness of scalar features for a binary (`±1`) labelling.
//!
//! `rho` is the empirical correlation `mean(y * f(x))`. `gamma` is the same
//! mean after each point has been moved, within an L-infinity ball of radius
//! `delta`, to wherever it makes `y * f(x + d)` smallest. Features with high
//! `rho` but much lower `gamma` are fragile: they agree with the label at a
//! point but not throughout its neighbourhood.

use std::io::Read;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::{Feature, Point};
use crate::rng::seeded_stream;

/// Corner search is exhaustive up to this dimension (4096 corners).
pub const MAX_CORNER_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Point>,
    labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(points: Vec<Point>, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return invalid(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            ));
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return invalid(format!("label {y} is not ±1"));
        }
        if let Some(p) = points.first() {
            let dim = p.dim();
            if let Some(q) = points.iter().find(|q| q.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: q.dim(),
                });
            }
        }
        Ok(Self { points, labels })
    }

    /// Points drawn uniformly from `[0,1)^dim` (sample `i` from stream
    /// `(seed, i)`), labelled `+1` when `x0 > 1/2` and `-1` otherwise.
    pub fn uniform_threshold(size: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        let points: Vec<Point> = (0..size as u64)
            .into_par_iter()
            .map(|i| Point::new(seeded_stream(seed, i).unit_point(dim)))
            .collect::<Result<_>>()?;
        let labels = points
            .iter()
            .map(|p| if p.coords()[0] > 0.5 { 1.0 } else { -1.0 })
            .collect();
        Ok(Self { points, labels })
    }

    /// Reads `x0,...,x{d-1},y` CSV with a header row. Labels `{0,1}` are
    /// mapped to `{-1,1}`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut text = String::new();
        let mut reader = reader;
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::InvalidInput(format!("cannot read dataset: {e}")))?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("dataset has no header".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        let dim = header.len().saturating_sub(1);
        let expected: Vec<String> = (0..dim)
            .map(|i| format!("x{i}"))
            .chain(["y".into()])
            .collect();
        if dim == 0 || header != expected {
            return invalid(format!(
                "dataset header must be x0..x{{d-1}},y, got `{}`",
                header.join(",")
            ));
        }

        let mut points = Vec::new();
        let mut raw_labels = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = n + 2;
            let values = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?;
            if values.len() != dim + 1 {
                return invalid(format!(
                    "row {row} has {} fields, expected {}",
                    values.len(),
                    dim + 1
                ));
            }
            raw_labels.push(values[dim]);
            points.push(
                Point::new(values[..dim].to_vec())
                    .map_err(|e| Error::InvalidInput(format!("row {row}: {e}")))?,
            );
        }

        let has_zero = raw_labels.contains(&0.0);
        let has_minus = raw_labels.contains(&-1.0);
        if has_zero && has_minus {
            return invalid("labels mix 0 and -1");
        }
        let labels = raw_labels
            .into_iter()
            .map(|y| if y == 0.0 { -1.0 } else { y })
            .collect();
        Self::new(points, labels)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// The same points with every label negated.
    pub fn flipped(&self) -> Self {
        Self {
            points: self.points.clone(),
            labels: self.labels.iter().map(|y| -y).collect(),
        }
    }
}

/// L-infinity ball of perturbations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSet {
    radius: f64,
}

impl PerturbationSet {
    pub fn linf(radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return invalid(format!(
                "perturbation radius must be non-negative, got {radius}"
            ));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureUsefulness {
    pub feature_id: String,
    pub rho: f64,
    pub gamma: f64,
    pub delta: PerturbationSet,
    /// Whether `gamma` came from the exhaustive corner search.
    pub exact: bool,
}

impl FeatureUsefulness {
    pub fn gap(&self) -> f64 {
        self.rho - self.gamma
    }
}

fn check_data(data: &LabeledDataset, feature: &Feature) -> Result<usize> {
    let dim = data
        .dim()
        .ok_or_else(|| Error::InvalidInput("dataset is empty".into()))?;
    feature.check_dim(dim)?;
    Ok(dim)
}

/// Sums in index order so the result does not depend on scheduling.
fn ordered_mean(values: Vec<f64>) -> f64 {
    let n = values.len() as f64;
    values.into_iter().sum::<f64>() / n
}

/// `mean(y * f(x))` over the dataset.
pub fn rho_useful(feature: &Feature, data: &LabeledDataset) -> Result<f64> {
    check_data(data, feature)?;
    let terms: Vec<f64> = data
        .points
        .par_iter()
        .zip(&data.labels)
        .map(|(x, y)| y * feature.eval(x.coords()))
        .collect();
    Ok(ordered_mean(terms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub value: f64,
    pub exact: bool,
}

fn assert_in_cube(p: &[f64]) {
    debug_assert!(
        p.iter().all(|v| (0.0..=1.0).contains(v)),
        "perturbed point left the cube: {p:?}"
    );
}

/// Smallest `y * f(x + d)` over the corners of the clipped L-infinity box and
/// the unperturbed point.
fn corner_minimum(feature: &Feature, x: &[f64], y: f64, radius: f64) -> f64 {
    let dim = x.len();
    let mut best = y * feature.eval(x);
    let mut p = vec![0.0; dim];
    for mask in 0u32..(1u32 << dim) {
        for (j, (pj, xj)) in p.iter_mut().zip(x).enumerate() {
            let step = if mask >> j & 1 == 1 { radius } else { -radius };
            *pj = (xj + step).clamp(0.0, 1.0);
        }
        assert_in_cube(&p);
        best = best.min(y * feature.eval(&p));
    }
    best
}

/// Coordinate descent from `d = 0`: each sweep sets every coordinate in turn
/// to whichever of `{-r, 0, +r}` lowers `y * f` the most.
fn coordinate_descent_minimum(
    feature: &Feature,
    x: &[f64],
    y: f64,
    radius: f64,
    sweeps: u32,
) -> f64 {
    let mut p = x.to_vec();
    let mut best = y * feature.eval(&p);
    for _ in 0..sweeps {
        let mut improved = false;
        for j in 0..p.len() {
            let keep = p[j];
            let mut choice = keep;
            for cand in [x[j] - radius, x[j], x[j] + radius] {
                p[j] = cand.clamp(0.0, 1.0);
                assert_in_cube(&p);
                let v = y * feature.eval(&p);
                if v < best {
                    best = v;
                    choice = p[j];
                    improved = true;
                }
            }
            p[j] = choice;
        }
        if !improved {
            break;
        }
    }
    best
}

/// Mean of the per-point worst case `y * f(x + d)` over the perturbation set.
///
/// Up to [`MAX_CORNER_DIM`] dimensions every corner of the box is evaluated,
/// which is exact for features monotone in each coordinate. Above that,
/// `coord_iters` sweeps of coordinate descent give an upper bound.
pub fn gamma_robust(
    feature: &Feature,
    data: &LabeledDataset,
    delta: &PerturbationSet,
    coord_iters: u32,
) -> Result<GammaEstimate> {
    let dim = check_data(data, feature)?;
    let exact = dim <= MAX_CORNER_DIM;
    let r = delta.radius;
    let terms: Vec<f64> = data
        .points
        .par_iter()
        .zip(&data.labels)
        .map(|(x, &y)| {
            if r == 0.0 {
                y * feature.eval(x.coords())
            } else if exact {
                corner_minimum(feature, x.coords(), y, r)
            } else {
                coordinate_descent_minimum(feature, x.coords(), y, r, coord_iters)
            }
        })
        .collect();
    Ok(GammaEstimate {
        value: ordered_mean(terms),
        exact,
    })
}

/// `rho` and `gamma` for each feature, sorted by `rho - gamma` descending with
/// the feature name breaking ties.
pub fn fragility_scan(
    features: &[Feature],
    data: &LabeledDataset,
    delta: &PerturbationSet,
    coord_iters: u32,
) -> Result<Vec<FeatureUsefulness>> {
    if features.is_empty() {
        return invalid("at least one feature is required");
    }
    let mut rows = features
        .iter()
        .map(|f| {
            let rho = rho_useful(f, data)?;
            let g = gamma_robust(f, data, delta, coord_iters)?;
            Ok(FeatureUsefulness {
                feature_id: f.name().to_string(),
                rho,
                gamma: g.value,
                delta: *delta,
                exact: g.exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.gap()
            .total_cmp(&a.gap())
            .then_with(|| a.feature_id.cmp(&b.feature_id))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_1d() -> LabeledDataset {
        LabeledDataset::uniform_threshold(100_000, 1, 2024).unwrap()
    }

    /// Midpoint-rule integral of `g` over [0,1].
    fn integrate(g: impl Fn(f64) -> f64, n: usize) -> f64 {
        (0..n).map(|i| g((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64
    }

    /// Worst case of `y * f` over 1001 evenly spaced offsets in `[-r, r]`.
    fn grid_minimum(f: &Feature, x: f64, y: f64, r: f64) -> f64 {
        (0..=1000)
            .map(|i| {
                let d = -r + 2.0 * r * i as f64 / 1000.0;
                y * f.eval(&[(x + d).clamp(0.0, 1.0)])
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn grid_gamma(f: &Feature, data: &LabeledDataset, r: f64) -> f64 {
        data.points()
            .iter()
            .zip(data.labels())
            .map(|(p, &y)| grid_minimum(f, p.coords()[0], y, r))
            .sum::<f64>()
            / data.len() as f64
    }

    #[test]
    fn rho_examples() {
        let data = data_1d();
        let label_feature = Feature::new("label", |x| if x[0] > 0.5 { 1.0 } else { -1.0 });
        assert_eq!(rho_useful(&label_feature, &data).unwrap(), 1.0);
        assert_eq!(rho_useful(&Feature::constant(0.0), &data).unwrap(), 0.0);

        let oracle = integrate(|t| (t - 0.5).signum() * (2.0 * t - 1.0), 1_000_000);
        assert!((oracle - 0.5).abs() < 1e-9);
        let rho = rho_useful(&Feature::smooth(0), &data).unwrap();
        assert!((rho - oracle).abs() < 0.01, "{rho}");
    }

    #[test]
    fn gamma_examples() {
        let data = data_1d();
        let sign = Feature::sign(0);
        let none = PerturbationSet::linf(0.0).unwrap();
        assert_eq!(
            gamma_robust(&sign, &data, &none, 1).unwrap().value,
            rho_useful(&sign, &data).unwrap()
        );

        let delta = PerturbationSet::linf(0.1).unwrap();
        let g = gamma_robust(&sign, &data, &delta, 1).unwrap();
        assert!(g.exact);
        assert!((g.value - 0.6).abs() < 0.02, "{g:?}");
        let oracle = grid_gamma(&sign, &data, 0.1);
        assert!((g.value - oracle).abs() < 1e-12, "{} vs {oracle}", g.value);

        // Monotone feature: corners reach the grid minimum.
        let smooth = Feature::smooth(0);
        let g = gamma_robust(&smooth, &data, &delta, 1).unwrap();
        let oracle = grid_gamma(&smooth, &data, 0.1);
        assert!((g.value - oracle).abs() < 1e-9, "{} vs {oracle}", g.value);
    }

    #[test]
    fn gamma_is_non_increasing_in_radius() {
        let data = LabeledDataset::uniform_threshold(20_000, 3, 8).unwrap();
        for f in [Feature::sign(0), Feature::smooth(0), Feature::coordinate(2)] {
            let gs: Vec<f64> = [0.0, 0.05, 0.1, 0.2]
                .iter()
                .map(|&r| {
                    gamma_robust(&f, &data, &PerturbationSet::linf(r).unwrap(), 1)
                        .unwrap()
                        .value
                })
                .collect();
            assert!(gs.windows(2).all(|w| w[1] <= w[0]), "{}: {gs:?}", f.name());
            assert_eq!(gs[0], rho_useful(&f, &data).unwrap());
        }
    }

    #[test]
    fn high_dimensions_use_coordinate_descent() {
        let data = LabeledDataset::uniform_threshold(500, 14, 3).unwrap();
        let f = Feature::new("sum", |x| x.iter().sum::<f64>() - 7.0);
        let delta = PerturbationSet::linf(0.05).unwrap();
        let g = gamma_robust(&f, &data, &delta, 4).unwrap();
        assert!(!g.exact);
        assert!(g.value <= rho_useful(&f, &data).unwrap() + 1e-9);
        // For a linear feature coordinate descent finds the corner.
        let expected: f64 = data
            .points()
            .iter()
            .zip(data.labels())
            .map(|(p, &y)| {
                let shifted: f64 = p
                    .coords()
                    .iter()
                    .map(|v| (v - y * 0.05).clamp(0.0, 1.0))
                    .sum();
                y * (shifted - 7.0)
            })
            .sum::<f64>()
            / 500.0;
        assert!((g.value - expected).abs() < 1e-9);
    }

    #[test]
    fn flipping_labels_negates_rho() {
        let data = LabeledDataset::uniform_threshold(5000, 2, 1).unwrap();
        for f in [Feature::smooth(1), Feature::sign(0), Feature::coordinate(0)] {
            assert_eq!(
                rho_useful(&f, &data.flipped()).unwrap(),
                -rho_useful(&f, &data).unwrap()
            );
        }
    }

    #[test]
    fn scan_orders_by_gap() {
        let data = data_1d();
        let delta = PerturbationSet::linf(0.1).unwrap();
        let rows = fragility_scan(
            &[Feature::smooth(0), Feature::constant(0.0), Feature::sign(0)],
            &data,
            &delta,
            1,
        )
        .unwrap();
        let ids: Vec<&str> = rows.iter().map(|r| r.feature_id.as_str()).collect();
        assert_eq!(ids, vec!["sign:0", "smooth:0", "const:0"]);
        assert!((rows[0].gap() - 0.4).abs() < 0.03);
        let smooth_oracle = rho_useful(&Feature::smooth(0), &data).unwrap()
            - grid_gamma(&Feature::smooth(0), &data, 0.1);
        assert!((rows[1].gap() - smooth_oracle).abs() < 1e-9);
        assert!(rows[0].gap() > rows[1].gap());
        assert_eq!((rows[2].rho, rows[2].gamma), (0.0, 0.0));
        for r in &rows {
            assert!(r.gamma <= r.rho + 1e-9);
        }
        assert!(fragility_scan(&[], &data, &delta, 1).is_err());
    }

    #[test]
    fn csv_ingestion() {
        let text = "x0,x1,y\n0.1,0.2,1\n0.9,0.4,0\n";
        let d = LabeledDataset::from_csv(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels(), &[1.0, -1.0]);
        assert_eq!(d.dim(), Some(2));

        assert!(LabeledDataset::from_csv("x0,y\n0.1,2\n".as_bytes()).is_err());
        assert!(LabeledDataset::from_csv("x0,y\n0.1,0\n0.2,-1\n".as_bytes()).is_err());
        assert!(LabeledDataset::from_csv("a,y\n0.1,1\n".as_bytes()).is_err());
        assert!(LabeledDataset::from_csv("x0,y\n1.5,1\n".as_bytes()).is_err());
        assert!(LabeledDataset::from_csv("x0,y\n0.5\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let empty = LabeledDataset::new(vec![], vec![]).unwrap();
        assert!(rho_useful(&Feature::smooth(0), &empty).is_err());
        assert!(PerturbationSet::linf(-0.1).is_err());
        assert!(LabeledDataset::new(vec![Point::new(vec![0.2]).unwrap()], vec![0.5]).is_err());
        let data = LabeledDataset::uniform_threshold(10, 1, 0).unwrap();
        assert!(rho_useful(&Feature::sign(1), &data).is_err());
    }
}
