//! Points, labels and classifiers over the unit hypercube.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// A point of the unit hypercube `[0,1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("a point needs at least one coordinate");
        }
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return invalid(format!("coordinate {i} = {v} lies outside [0,1]"));
        }
        Ok(Self { coords })
    }

    /// Builds a point by clamping every coordinate into `[0,1]`.
    ///
    /// NaN coordinates are rejected since they have no nearest cube point.
    pub fn clipped(mut coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|v| v.is_nan()) {
            return invalid("NaN coordinate");
        }
        clip_in_place(&mut coords);
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn distance(&self, other: &Point) -> f64 {
        euclidean(&self.coords, &other.coords)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn clip_in_place(coords: &mut [f64]) {
    for v in coords {
        *v = v.clamp(0.0, 1.0);
    }
}

/// A class index together with the size of the label set it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Label {
    index: usize,
    cardinality: usize,
}

impl Label {
    pub fn new(index: usize, cardinality: usize) -> Result<Self> {
        if index >= cardinality {
            return invalid(format!(
                "label index {index} out of range for {cardinality} labels"
            ));
        }
        Ok(Self { index, cardinality })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.cardinality)
    }
}

/// A deterministic, total label map over the unit hypercube.
///
/// Implementations must be pure: the same coordinates always produce the same
/// label, from any thread. Whenever a comparison ties exactly the lowest label
/// index wins.
pub trait DecisionFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// Size of the label set.
    fn labels(&self) -> usize;

    /// Raw label index of `x`. Callers guarantee `x.len() == self.dim()` and
    /// that every coordinate lies in `[0,1]`.
    fn label_of(&self, x: &[f64]) -> usize;

    fn evaluate(&self, x: &Point) -> Result<Label> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(Label {
            index: self.label_of(x.coords()),
            cardinality: self.labels(),
        })
    }
}

impl<T: DecisionFunction + ?Sized> DecisionFunction for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn labels(&self) -> usize {
        (**self).labels()
    }
    fn label_of(&self, x: &[f64]) -> usize {
        (**self).label_of(x)
    }
}

impl<T: DecisionFunction + ?Sized> DecisionFunction for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn labels(&self) -> usize {
        (**self).labels()
    }
    fn label_of(&self, x: &[f64]) -> usize {
        (**self).label_of(x)
    }
}

impl<T: DecisionFunction + ?Sized> DecisionFunction for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn labels(&self) -> usize {
        (**self).labels()
    }
    fn label_of(&self, x: &[f64]) -> usize {
        (**self).label_of(x)
    }
}

/// A classifier returning a probability vector of length `labels()`.
pub trait SoftDecisionFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn labels(&self) -> usize;
    fn probabilities(&self, x: &[f64]) -> Vec<f64>;
}

/// Index of the largest entry; the lowest index wins ties. NaN never wins.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax of `logits`.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Every point gets the same label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constant {
    pub dim: usize,
    pub label: usize,
    pub labels: usize,
}

impl Constant {
    pub fn new(dim: usize, label: usize, labels: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        Label::new(label, labels)?;
        Ok(Self { dim, label, labels })
    }
}

impl DecisionFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn labels(&self) -> usize {
        self.labels
    }
    fn label_of(&self, _x: &[f64]) -> usize {
        self.label
    }
}

/// Binary half-space classifier: label 1 iff `normal . x - offset > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vec<f64>,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() {
            return invalid("half-space normal must be non-empty");
        }
        if normal.iter().all(|w| *w == 0.0) || normal.iter().any(|w| !w.is_finite()) {
            return invalid("half-space normal must be finite and non-zero");
        }
        if !offset.is_finite() {
            return invalid("half-space offset must be finite");
        }
        Ok(Self { normal, offset })
    }

    /// `x0 > threshold` in one dimension.
    pub fn threshold_1d(threshold: f64) -> Self {
        Self {
            normal: vec![1.0],
            offset: threshold,
        }
    }

    /// `x0 > threshold` in two dimensions.
    pub fn half_plane_2d(threshold: f64) -> Self {
        Self {
            normal: vec![1.0, 0.0],
            offset: threshold,
        }
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Perpendicular Euclidean distance from `x` to the separating hyperplane.
    pub fn distance_to_plane(&self, x: &[f64]) -> f64 {
        let norm = self.normal.iter().map(|w| w * w).sum::<f64>().sqrt();
        (self.margin(x)).abs() / norm
    }

    fn margin(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() - self.offset
    }
}

impl DecisionFunction for HalfSpace {
    fn dim(&self) -> usize {
        self.normal.len()
    }
    fn labels(&self) -> usize {
        2
    }
    fn label_of(&self, x: &[f64]) -> usize {
        usize::from(self.margin(x) > 0.0)
    }
}

/// Label 1 iff the mean coordinate exceeds `threshold`. Invariant under every
/// permutation of coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanThreshold {
    pub dim: usize,
    pub threshold: f64,
}

impl DecisionFunction for MeanThreshold {
    fn dim(&self) -> usize {
        self.dim
    }
    fn labels(&self) -> usize {
        2
    }
    fn label_of(&self, x: &[f64]) -> usize {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        usize::from(mean > self.threshold)
    }
}

type FeatureMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A named scalar map `f : [0,1]^dim -> R`.
#[derive(Clone)]
pub struct Feature {
    name: String,
    map: FeatureMap,
}

impl fmt::Debug for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Feature").field("name", &self.name).finish()
    }
}

impl Feature {
    pub fn new(
        name: impl Into<String>,
        map: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.map)(x)
    }

    /// `x -> x[axis]`.
    pub fn coordinate(axis: usize) -> Self {
        Self::new(format!("coord:{axis}"), move |x| x[axis])
    }

    /// `x -> 2 x[axis] - 1`.
    pub fn smooth(axis: usize) -> Self {
        Self::new(format!("smooth:{axis}"), move |x| 2.0 * x[axis] - 1.0)
    }

    /// `x -> sign(x[axis] - 1/2)`, with `sign(0) = 0`.
    pub fn sign(axis: usize) -> Self {
        Self::new(format!("sign:{axis}"), move |x| {
            let t = x[axis] - 0.5;
            if t > 0.0 {
                1.0
            } else if t < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("const:{value}"), move |_| value)
    }

    /// Largest coordinate index the feature reads, if it is a built-in axis feature.
    fn axis(&self) -> Option<usize> {
        self.name
            .split_once(':')
            .and_then(|(kind, arg)| match kind {
                "coord" | "smooth" | "sign" => arg.parse().ok(),
                _ => None,
            })
    }

    /// Checks that a built-in axis feature can read points of dimension `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.axis() {
            Some(axis) if axis >= dim => invalid(format!(
                "feature {} reads axis {axis} but points have dimension {dim}",
                self.name
            )),
            _ => Ok(()),
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    /// Parses `coord:<i>`, `smooth:<i>`, `sign:<i>` or `const:<v>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("feature `{s}` is not of the form kind:arg"))
        })?;
        let axis = || {
            arg.parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad axis in feature `{s}`")))
        };
        match kind {
            "coord" => Ok(Self::coordinate(axis()?)),
            "smooth" => Ok(Self::smooth(axis()?)),
            "sign" => Ok(Self::sign(axis()?)),
            "const" => arg
                .parse::<f64>()
                .map(Self::constant)
                .map_err(|_| Error::InvalidInput(format!("bad constant in feature `{s}`"))),
            _ => invalid(format!("unknown feature kind `{kind}`")),
        }
    }
}

/// Monotone scalar activation applied to the weighted feature sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Logistic,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Logistic => "logistic",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "logistic" => Ok(Activation::Logistic),
            "tanh" => Ok(Activation::Tanh),
            _ => invalid(format!("unknown activation `{s}`")),
        }
    }
}

/// Binary classifier `b + sigma(sum_i w_i f_i(x))`, thresholded at zero.
///
/// Label 1 when the value is strictly positive, label 0 otherwise (an exact
/// zero goes to the lower label).
#[derive(Debug, Clone)]
pub struct LinearFeatureClassifier {
    dim: usize,
    features: Vec<Feature>,
    weights: Vec<f64>,
    bias: f64,
    activation: Activation,
}

impl LinearFeatureClassifier {
    pub fn new(
        dim: usize,
        features: Vec<Feature>,
        weights: Vec<f64>,
        bias: f64,
        activation: Activation,
    ) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        if features.len() != weights.len() {
            return invalid(format!(
                "{} feature maps but {} weights",
                features.len(),
                weights.len()
            ));
        }
        for f in &features {
            f.check_dim(dim)?;
        }
        Ok(Self {
            dim,
            features,
            weights,
            bias,
            activation,
        })
    }

    /// Features are the raw coordinates `x_0 .. x_{n-1}`, one weight each.
    pub fn on_coordinates(weights: Vec<f64>, bias: f64, activation: Activation) -> Result<Self> {
        let features = (0..weights.len()).map(Feature::coordinate).collect();
        Self::new(weights.len(), features, weights, bias, activation)
    }

    /// The weighted feature sum before the activation.
    pub fn pre_activation(&self, x: &[f64]) -> f64 {
        self.features
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.eval(x))
            .sum()
    }

    /// `b + sigma(sum_i w_i f_i(x))`.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.bias + self.activation.apply(self.pre_activation(x))
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl DecisionFunction for LinearFeatureClassifier {
    fn dim(&self) -> usize {
        self.dim
    }
    fn labels(&self) -> usize {
        2
    }
    fn label_of(&self, x: &[f64]) -> usize {
        usize::from(self.score(x) > 0.0)
    }
}

/// Applies the linear classifier to `x`, rejecting points of the wrong dimension.
pub fn evaluate_linear(c: &LinearFeatureClassifier, x: &Point) -> Result<Label> {
    c.evaluate(x)
}
